use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dixit_cli::{emit, tournament_report, tournament_run, Format};

/// Run bot tournaments and report metrics over their logs.
#[derive(Parser)]
#[command(name = "tournament", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play every game in a tournament spec, logging each to `--out`.
    Run {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate metrics over a directory of game logs.
    Report {
        #[arg(long)]
        logs: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

fn main() -> ExitCode {
    dixit_cli::init_tracing();
    let result = match Cli::parse().command {
        Command::Run { spec, out } => tournament_run(&spec, &out).map(|text| (text, Vec::new())),
        Command::Report { logs, format } => tournament_report(&logs, format),
    };
    match result {
        Ok((body, notes)) => {
            emit(&body, &notes);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
