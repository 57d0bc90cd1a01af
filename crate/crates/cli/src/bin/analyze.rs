use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dixit_cli::{
    analyze_agreement, analyze_captions, analyze_clipscore, analyze_labels, emit, load_logs, parse_voters, CliError,
    Format, GroupBy,
};
use dixit_core::analysis::LabelSet;

/// Statistics over a directory of game logs.
#[derive(Parser)]
#[command(name = "analyze", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    logs: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Pairwise vote agreement between players.
    Agreement {
        #[command(flatten)]
        common: Common,
        /// Comma-separated player ids; defaults to everyone who voted.
        #[arg(long)]
        voters: Option<String>,
    },
    /// Storyteller caption lengths in tokens.
    Captions {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = GroupBy::Player)]
        by: GroupBy,
    },
    /// Rationale label shares and selection accuracy from an annotation file.
    Labels {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        labels: PathBuf,
    },
    /// Caption-image similarity per storyteller.
    Clipscore {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        provider: PathBuf,
    },
}

fn run(command: Command) -> Result<(String, Vec<String>), CliError> {
    match command {
        Command::Agreement { common, voters } => {
            let loaded = load_logs(&common.logs)?;
            let body = analyze_agreement(&loaded.logs, &parse_voters(voters.as_deref()), common.format);
            Ok((body, loaded.skipped))
        }
        Command::Captions { common, by } => {
            let loaded = load_logs(&common.logs)?;
            Ok((analyze_captions(&loaded.logs, by, common.format)?, loaded.skipped))
        }
        Command::Labels { common, labels } => {
            let loaded = load_logs(&common.logs)?;
            let set = LabelSet::load(&labels)?;
            let (body, mut notes) = analyze_labels(&loaded.logs, &set, common.format)?;
            notes.extend(loaded.skipped);
            Ok((body, notes))
        }
        Command::Clipscore { common, provider } => {
            let loaded = load_logs(&common.logs)?;
            Ok((analyze_clipscore(&loaded.logs, &provider, common.format)?, loaded.skipped))
        }
    }
}

fn main() -> ExitCode {
    dixit_cli::init_tracing();
    match run(Cli::parse().command) {
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
