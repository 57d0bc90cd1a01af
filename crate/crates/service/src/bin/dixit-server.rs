use std::path::PathBuf;
use std::sync::Arc;

use clap::Parser;

use dixit_core::agents::SimilarityTable;
use dixit_core::deck::{synthetic_cards, Manifest};
use dixit_service::server::{serve, ServerConfig};

/// Serve Dixit sessions mixing bots and human seats.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Address to listen on.
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: String,
    /// Deck directory holding index.csv and the card images.
    #[arg(long, conflicts_with = "synthetic")]
    deck: Option<PathBuf>,
    /// Use this many generated cards without images instead of a deck.
    #[arg(long, default_value_t = 100)]
    synthetic: usize,
    /// Similarity table JSON for table bots; generated from the deck when absent.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Seed for the generated similarity table.
    #[arg(long, default_value_t = 0)]
    table_seed: u64,
    /// Write one JSONL log per session here.
    #[arg(long)]
    log_dir: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let args = Args::parse();
    let (cards, image_root) = match &args.deck {
        Some(dir) => {
            let manifest = Manifest::load(dir)?;
            (manifest.cards, Some(manifest.root))
        }
        None => (synthetic_cards(args.synthetic), None),
    };
    let table = match &args.table {
        Some(path) => SimilarityTable::load(path)?,
        None => SimilarityTable::synthetic(&cards, args.table_seed),
    };
    if let Some(dir) = &args.log_dir {
        std::fs::create_dir_all(dir)?;
    }
    let config = ServerConfig {
        cards,
        image_root,
        table: Some(Arc::new(table)),
        log_dir: args.log_dir,
        tap: None,
    };
    let listener = tokio::net::TcpListener::bind(&args.bind).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    serve(listener, config).await?;
    Ok(())
}
