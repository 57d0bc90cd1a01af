use serde::{Deserialize, Serialize};

use dixit_core::agents::EndpointConfig;
use dixit_core::engine::GameConfig;
use dixit_core::ids::PlayerId;

use crate::error::ServiceError;

/// Body of `POST /sessions`.
///
/// ```json
/// {"seed": 7, "seats": [{"id": "ana", "kind": "human"}, {"id": "bot1", "kind": "table"}]}
/// ```
///
/// `game` defaults to the standard config sized to the seat list. Game
/// seeds are derived from `seed` the same way a one-game tournament does.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionSpec {
    pub seats: Vec<SeatSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub game: Option<GameConfig>,
    /// Bank finished rounds at once instead of waiting for every human's `next_round`.
    #[serde(default)]
    pub auto_advance: bool,
    /// Seconds a human may stall before a seeded random move is made for them.
    #[serde(default)]
    pub human_timeout_secs: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeatSpec {
    pub id: PlayerId,
    #[serde(flatten)]
    pub kind: SeatKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeatKind {
    Human,
    Random,
    Table,
    Remote { endpoint: EndpointConfig },
}

impl SeatKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Human => "human",
            Self::Random => "random",
            Self::Table => "table",
            Self::Remote { .. } => "remote",
        }
    }
}

impl SessionSpec {
    pub fn game_config(&self) -> Result<GameConfig, ServiceError> {
        let config = match &self.game {
            Some(c) if c.num_players != self.seats.len() => {
                return Err(ServiceError::InvalidSpec(format!(
                    "{} seats but game.num_players = {}",
                    self.seats.len(),
                    c.num_players
                )))
            }
            Some(c) => c.clone(),
            None => GameConfig {
                num_players: self.seats.len(),
                ..GameConfig::default()
            },
        };
        config.validate()?;
        Ok(config)
    }

    pub fn roster(&self) -> Vec<PlayerId> {
        self.seats.iter().map(|s| s.id.clone()).collect()
    }
}
