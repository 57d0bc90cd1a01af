use thiserror::Error;

use crate::engine::Phase;
use crate::ids::{CardId, PlayerId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("invalid game config: {0}")]
    InvalidConfig(String),
    #[error("deck too small: need at least {needed} cards, manifest has {available}")]
    DeckTooSmall { needed: usize, available: usize },
    #[error("duplicate card id {0}")]
    DuplicateCardId(CardId),
    #[error("roster has {actual} players, config expects {expected}")]
    RosterSizeMismatch { expected: usize, actual: usize },
    #[error("duplicate player id {0}")]
    DuplicatePlayerId(PlayerId),
    #[error("unknown player {0}")]
    UnknownPlayer(PlayerId),
    #[error("operation not allowed in phase {actual:?} (expected {expected:?})")]
    WrongPhase { expected: Phase, actual: Phase },
    #[error("{0} is not the storyteller this round")]
    NotStoryteller(PlayerId),
    #[error("card {card} is not in {player}'s hand")]
    CardNotInHand { player: PlayerId, card: CardId },
    #[error("caption is empty after normalization")]
    EmptyCaption,
    #[error("the storyteller cannot submit a decoy")]
    StorytellerCannotDecoy,
    #[error("{0} already submitted a card this round")]
    AlreadySubmitted(PlayerId),
    #[error("expected {expected} staged cards, got {actual}")]
    WrongCardCount { expected: usize, actual: usize },
    #[error("the storyteller has no vote view")]
    StorytellerHasNoVoteView,
    #[error("{0} voted for their own card")]
    OwnCardVote(PlayerId),
    #[error("card {0} is not in the pool")]
    CardNotInPool(CardId),
    #[error("{0} already voted this round")]
    AlreadyVoted(PlayerId),
    #[error("the storyteller cannot vote")]
    StorytellerCannotVote,
    #[error("expected {expected} votes, got {actual}")]
    IncompleteVotes { expected: usize, actual: usize },
    #[error("malformed vote: {0}")]
    MalformedVote(String),
    #[error("deck exhausted while replenishing hands")]
    DeckExhaustedMidDraw,
}

impl EngineError {
    /// Stable machine-readable code, used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            Self::InvalidConfig(_) => "InvalidConfig",
            Self::DeckTooSmall { .. } => "DeckTooSmall",
            Self::DuplicateCardId(_) => "DuplicateCardId",
            Self::RosterSizeMismatch { .. } => "RosterSizeMismatch",
            Self::DuplicatePlayerId(_) => "DuplicatePlayerId",
            Self::UnknownPlayer(_) => "UnknownPlayer",
            Self::WrongPhase { .. } => "WrongPhase",
            Self::NotStoryteller(_) => "NotStoryteller",
            Self::CardNotInHand { .. } => "CardNotInHand",
            Self::EmptyCaption => "EmptyCaption",
            Self::StorytellerCannotDecoy => "StorytellerCannotDecoy",
            Self::AlreadySubmitted(_) => "AlreadySubmitted",
            Self::WrongCardCount { .. } => "WrongCardCount",
            Self::StorytellerHasNoVoteView => "StorytellerHasNoVoteView",
            Self::OwnCardVote(_) => "OwnCardVote",
            Self::CardNotInPool(_) => "CardNotInPool",
            Self::AlreadyVoted(_) => "AlreadyVoted",
            Self::StorytellerCannotVote => "StorytellerCannotVote",
            Self::IncompleteVotes { .. } => "IncompleteVotes",
            Self::MalformedVote(_) => "MalformedVote",
            Self::DeckExhaustedMidDraw => "DeckExhaustedMidDraw",
        }
    }
}
