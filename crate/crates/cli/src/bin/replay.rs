use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

/// Re-run a game log through the engine and report the first divergence.
#[derive(Parser)]
#[command(name = "replay", version)]
struct Cli {
    #[arg(long)]
    log: PathBuf,
}

fn main() -> ExitCode {
    dixit_cli::init_tracing();
    let cli = Cli::parse();
    match dixit_cli::replay_file(&cli.log) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
