//! Dixit as a multi-agent evaluation arena.
//!
//! - [`engine`]: the authoritative rules engine and per-player views
//! - [`agents`]: the player contract plus random, table-driven and remote agents
//! - [`prompts`]: prompt templates and structured-reply parsing
//! - [`runner`]: drives one game between agents
//! - [`logstore`]: line-delimited game logs and exact replay
//! - [`tournament`]: repeated games, metrics and rank correlation
//! - [`analysis`]: agreement, caption and label statistics over logs

pub mod agents;
pub mod analysis;
pub mod deck;
pub mod engine;
pub mod ids;
pub mod logstore;
pub mod prompts;
pub mod ranks;
pub mod rng;
pub mod runner;
pub mod tournament;

pub use deck::{Card, Deck, Manifest};
pub use engine::{GameConfig, GameState, Phase};
pub use ids::{CardId, PlayerId};
