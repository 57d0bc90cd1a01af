//! The player contract and its implementations.
//!
//! The engine asks an agent for four decisions per round, depending on its
//! role: which hand card to caption, the caption itself, a decoy for the
//! storyteller's caption, and a vote over the visible pool. Every reply
//! carries a free-text rationale.

mod random;
mod remote;
mod scripted;
mod table;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deck::Card;

pub use random::{CaptionBank, CaptionBankError, RandomAgent};
pub use remote::{
    AuditRecord, AuditSink, ChatMessage, ChatRequest, ChatResponse, ChatTransport, ContentPart,
    EndpointConfig, HttpTransport, ImageUrl, RemoteAgent, TransportError,
};
pub use scripted::ScriptedAgent;
pub use table::{SimilarityTable, TableAgent, TableError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Caption(String),
    Choice(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentReply {
    pub thought: String,
    pub decision: Decision,
    /// Set when the decision was substituted after the agent failed to answer.
    #[serde(default)]
    pub fallback: bool,
}

impl AgentReply {
    pub fn choice(index: usize, thought: impl Into<String>) -> Self {
        Self {
            thought: thought.into(),
            decision: Decision::Choice(index),
            fallback: false,
        }
    }

    pub fn caption(text: impl Into<String>, thought: impl Into<String>) -> Self {
        Self {
            thought: thought.into(),
            decision: Decision::Caption(text.into()),
            fallback: false,
        }
    }

    pub fn as_choice(&self) -> Option<usize> {
        match self.decision {
            Decision::Choice(i) => Some(i),
            Decision::Caption(_) => None,
        }
    }

    pub fn as_caption(&self) -> Option<&str> {
        match &self.decision {
            Decision::Caption(c) => Some(c),
            Decision::Choice(_) => None,
        }
    }

    /// The reply in the prompt's output schema: `{"thought": ..., "choice": "2"}`.
    pub fn to_schema_json(&self) -> String {
        let value = match &self.decision {
            Decision::Caption(c) => serde_json::json!({ "thought": self.thought, "caption": c }),
            Decision::Choice(i) => {
                serde_json::json!({ "thought": self.thought, "choice": i.to_string() })
            }
        };
        value.to_string()
    }
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("invalid reply: {0}")]
    InvalidReply(String),
    #[error("agent misconfigured: {0}")]
    Config(String),
    #[error("agent script exhausted")]
    ScriptExhausted,
}

/// A Dixit player. Implementations are called serially per instance.
pub trait Agent: Send {
    fn select_story_card(&mut self, hand: &[Card]) -> Result<AgentReply, AgentError>;

    fn caption_card(&mut self, card: &Card) -> Result<AgentReply, AgentError>;

    fn select_decoy(&mut self, caption: &str, hand: &[Card]) -> Result<AgentReply, AgentError>;

    fn vote(&mut self, caption: &str, pool: &[Card]) -> Result<AgentReply, AgentError>;

    /// Short description recorded in log headers.
    fn describe(&self) -> String;

    /// Number of decisions that were substituted by a fallback so far.
    fn fallback_count(&self) -> usize {
        0
    }
}

impl<A: Agent + ?Sized> Agent for Box<A> {
    fn select_story_card(&mut self, hand: &[Card]) -> Result<AgentReply, AgentError> {
        (**self).select_story_card(hand)
    }

    fn caption_card(&mut self, card: &Card) -> Result<AgentReply, AgentError> {
        (**self).caption_card(card)
    }

    fn select_decoy(&mut self, caption: &str, hand: &[Card]) -> Result<AgentReply, AgentError> {
        (**self).select_decoy(caption, hand)
    }

    fn vote(&mut self, caption: &str, pool: &[Card]) -> Result<AgentReply, AgentError> {
        (**self).vote(caption, pool)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }

    fn fallback_count(&self) -> usize {
        (**self).fallback_count()
    }
}

/// Index of the highest score; ties go to the lowest index.
pub(crate) fn argmax(scores: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.into_iter().enumerate() {
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}
