use std::sync::Arc;

use thiserror::Error;

use crate::agents::{Agent, AgentError, AgentReply};
use crate::deck::Card;
use crate::rng::{derive_seed, GameRng};

pub const CAPTION_BANK_SIZE: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CaptionBankError {
    #[error("caption bank needs exactly {CAPTION_BANK_SIZE} captions, got {0}")]
    WrongSize(usize),
    #[error("caption {0} is empty")]
    EmptyCaption(usize),
}

/// Fixed list of captions the random baseline picks from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaptionBank {
    captions: Vec<String>,
}

impl CaptionBank {
    pub fn new(captions: Vec<String>) -> Result<Self, CaptionBankError> {
        if captions.len() != CAPTION_BANK_SIZE {
            return Err(CaptionBankError::WrongSize(captions.len()));
        }
        if let Some(i) = captions.iter().position(|c| c.trim().is_empty()) {
            return Err(CaptionBankError::EmptyCaption(i));
        }
        Ok(Self { captions })
    }

    /// One caption per non-empty line.
    pub fn parse(text: &str) -> Result<Self, CaptionBankError> {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_owned)
                .collect(),
        )
    }

    pub fn captions(&self) -> &[String] {
        &self.captions
    }
}

impl Default for CaptionBank {
    fn default() -> Self {
        Self::parse(include_str!("../../fixtures/captions.txt")).expect("bundled caption bank")
    }
}

/// Uniform baseline. Decision `k` is drawn from a generator seeded by
/// `(seed, k)`, so replies depend only on the seed, the call sequence number
/// and the size of the choice set.
#[derive(Debug, Clone)]
pub struct RandomAgent {
    seed: u64,
    seq: u64,
    bank: Arc<CaptionBank>,
}

impl RandomAgent {
    pub fn new(seed: u64) -> Self {
        Self::with_bank(seed, Arc::new(CaptionBank::default()))
    }

    pub fn with_bank(seed: u64, bank: Arc<CaptionBank>) -> Self {
        Self { seed, seq: 0, bank }
    }

    fn draw(&mut self, bound: usize) -> usize {
        let mut rng = GameRng::from_seed(derive_seed(self.seed, "random-agent", self.seq));
        self.seq += 1;
        rng.below(bound)
    }

    fn pick(&mut self, options: &[Card]) -> Result<AgentReply, AgentError> {
        if options.is_empty() {
            return Err(AgentError::InvalidReply("no cards to choose from".into()));
        }
        Ok(AgentReply::choice(self.draw(options.len()), "random choice"))
    }
}

impl Agent for RandomAgent {
    fn select_story_card(&mut self, hand: &[Card]) -> Result<AgentReply, AgentError> {
        self.pick(hand)
    }

    fn caption_card(&mut self, _card: &Card) -> Result<AgentReply, AgentError> {
        let i = self.draw(self.bank.captions.len());
        Ok(AgentReply::caption(self.bank.captions[i].clone(), "random caption"))
    }

    fn select_decoy(&mut self, _caption: &str, hand: &[Card]) -> Result<AgentReply, AgentError> {
        self.pick(hand)
    }

    fn vote(&mut self, _caption: &str, pool: &[Card]) -> Result<AgentReply, AgentError> {
        self.pick(pool)
    }

    fn describe(&self) -> String {
        format!("random(seed={})", self.seed)
    }
}
