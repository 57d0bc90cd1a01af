use thiserror::Error;

use dixit_core::engine::{EngineError, Phase};
use dixit_core::ids::PlayerId;

use crate::wire::WireError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServiceError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("seat token not recognised")]
    InvalidToken,
    #[error("seat {0} is already connected")]
    SeatTaken(PlayerId),
    #[error("connection is not bound to a seat")]
    NotBound,
    #[error("{player} has nothing to do for that action in phase {phase:?}")]
    NotYourTurnPhase { player: PlayerId, phase: Phase },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("invalid session spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("session {0} has stopped")]
    SessionClosed(String),
    #[error("log: {0}")]
    Log(String),
}

impl ServiceError {
    /// Machine-readable code for frames and HTTP bodies; engine errors keep their own.
    pub fn code(&self) -> &'static str {
        match self {
            Self::UnknownSession(_) => "UnknownSession",
            Self::InvalidToken => "InvalidToken",
            Self::SeatTaken(_) => "SeatTaken",
            Self::NotBound => "NotBound",
            Self::NotYourTurnPhase { .. } => "NotYourTurnPhase",
            Self::Engine(e) => e.code(),
            Self::InvalidSpec(_) => "InvalidSpec",
            Self::Wire(e) => e.code(),
            Self::SessionClosed(_) => "SessionClosed",
            Self::Log(_) => "LogError",
        }
    }
}
