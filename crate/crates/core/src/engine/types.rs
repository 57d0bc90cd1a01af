use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::EngineError;
use crate::ids::{CardId, PlayerId};

pub const MIN_PLAYERS: usize = 3;
pub const MAX_PLAYERS: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    pub num_players: usize,
    pub hand_size: usize,
    pub win_threshold: u32,
    pub shuffle_seed: u64,
    pub pool_seed: u64,
    pub agent_retry_limit: u32,
    /// Cap on the per-round bonus a non-storyteller earns from votes on their
    /// card. `None` leaves it unbounded; the official boxed game uses 3.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bonus_cap: Option<u32>,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            num_players: 4,
            hand_size: 6,
            win_threshold: 30,
            shuffle_seed: 0,
            pool_seed: 0,
            agent_retry_limit: 2,
            bonus_cap: None,
        }
    }
}

impl GameConfig {
    /// Smallest deck that deals every hand and survives one replenish.
    pub fn min_deck_size(&self) -> usize {
        self.num_players * self.hand_size + self.num_players
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(MIN_PLAYERS..=MAX_PLAYERS).contains(&self.num_players) {
            return Err(EngineError::InvalidConfig(format!(
                "num_players must be in {MIN_PLAYERS}..={MAX_PLAYERS}, got {}",
                self.num_players
            )));
        }
        if self.hand_size == 0 {
            return Err(EngineError::InvalidConfig("hand_size must be at least 1".into()));
        }
        if self.win_threshold == 0 {
            return Err(EngineError::InvalidConfig("win_threshold must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    AwaitingStory,
    AwaitingDecoys,
    AwaitingVotes,
    RoundComplete,
    GameOver,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndReason {
    Threshold,
    DeckEmpty,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerState {
    pub player_id: PlayerId,
    pub hand: Vec<CardId>,
    pub score: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub card_id: CardId,
    pub owner_id: PlayerId,
    pub pool_position: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub voter_id: PlayerId,
    pub chosen_card_id: CardId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    StorySelect,
    StoryCaption,
    Decoy,
    Vote,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rationale {
    pub player_id: PlayerId,
    pub action: ActionKind,
    pub text: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round_index: u32,
    pub storyteller_id: PlayerId,
    pub story_card_id: CardId,
    pub caption: String,
    pub pool: Vec<PoolEntry>,
    pub votes: Vec<VoteRecord>,
    pub score_deltas: BTreeMap<PlayerId, u32>,
    pub scores_after: BTreeMap<PlayerId, u32>,
    #[serde(default)]
    pub rationales: Vec<Rationale>,
}

impl RoundRecord {
    pub fn owner_of(&self, card: &CardId) -> Option<&PlayerId> {
        self.pool
            .iter()
            .find(|e| &e.card_id == card)
            .map(|e| &e.owner_id)
    }

    pub fn vote_of(&self, voter: &PlayerId) -> Option<&CardId> {
        self.votes
            .iter()
            .find(|v| &v.voter_id == voter)
            .map(|v| &v.chosen_card_id)
    }

    pub fn fallback_count(&self) -> usize {
        self.rationales.iter().filter(|r| r.fallback).count()
    }
}
