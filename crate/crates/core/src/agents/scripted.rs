use std::collections::VecDeque;

use crate::agents::{Agent, AgentError, AgentReply};
use crate::deck::Card;

/// Plays back a fixed queue of replies, one per call, regardless of role.
#[derive(Debug, Clone, Default)]
pub struct ScriptedAgent {
    replies: VecDeque<AgentReply>,
}

impl ScriptedAgent {
    pub fn new(replies: impl IntoIterator<Item = AgentReply>) -> Self {
        Self {
            replies: replies.into_iter().collect(),
        }
    }

    pub fn push(&mut self, reply: AgentReply) {
        self.replies.push_back(reply);
    }

    pub fn remaining(&self) -> usize {
        self.replies.len()
    }

    fn next(&mut self) -> Result<AgentReply, AgentError> {
        self.replies.pop_front().ok_or(AgentError::ScriptExhausted)
    }
}

impl Agent for ScriptedAgent {
    fn select_story_card(&mut self, _hand: &[Card]) -> Result<AgentReply, AgentError> {
        self.next()
    }

    fn caption_card(&mut self, _card: &Card) -> Result<AgentReply, AgentError> {
        self.next()
    }

    fn select_decoy(&mut self, _caption: &str, _hand: &[Card]) -> Result<AgentReply, AgentError> {
        self.next()
    }

    fn vote(&mut self, _caption: &str, _pool: &[Card]) -> Result<AgentReply, AgentError> {
        self.next()
    }

    fn describe(&self) -> String {
        "scripted".into()
    }
}
