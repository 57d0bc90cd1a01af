use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{argmax, Agent, AgentError, AgentReply};
use crate::deck::Card;
use crate::ids::CardId;
use crate::rng::{derive_seed, GameRng};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("reading similarity table: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing similarity table: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("score {score} for ({card}, {key:?}) is outside [0, 1]")]
    OutOfRange { card: CardId, key: String, score: f64 },
}

/// Deterministic card/caption affinities used by [`TableAgent`].
///
/// `scores[card][key]` holds affinities for whole-caption or single-token
/// keys (lowercased). A caption with no exact entry scores the mean of its
/// token entries, with absent tokens counting as 0, so the lookup is total.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTable {
    pub captions: BTreeMap<CardId, String>,
    pub scores: BTreeMap<CardId, BTreeMap<String, f64>>,
}

fn normalize_key(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
}

impl SimilarityTable {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, TableError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, TableError> {
        let table: Self = serde_json::from_str(text)?;
        table.validate()?;
        Ok(table)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn validate(&self) -> Result<(), TableError> {
        for (card, keys) in &self.scores {
            for (key, &score) in keys {
                if !(0.0..=1.0).contains(&score) {
                    return Err(TableError::OutOfRange {
                        card: card.clone(),
                        key: key.clone(),
                        score,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn score(&self, card: &CardId, caption: &str) -> f64 {
        let Some(keys) = self.scores.get(card) else {
            return 0.0;
        };
        if let Some(&exact) = keys.get(&normalize_key(caption)) {
            return exact;
        }
        let (sum, count) = tokens(caption).fold((0.0, 0usize), |(sum, n), t| {
            (sum + keys.get(&t).copied().unwrap_or(0.0), n + 1)
        });
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    pub fn caption_for(&self, card: &CardId) -> Option<&str> {
        self.captions.get(card).map(String::as_str)
    }

    /// Seeded table for a deck: every card gets three distinct theme words
    /// weighted 0.9, 0.6 and 0.3, and its caption is the first two words.
    pub fn synthetic(cards: &[Card], seed: u64) -> Self {
        const VOCABULARY: [&str; 24] = [
            "owl", "moon", "river", "castle", "dragon", "key", "mirror", "forest", "ship",
            "tower", "fox", "lantern", "cloud", "garden", "crown", "bridge", "whale", "clock",
            "mask", "feather", "door", "star", "snail", "balloon",
        ];
        let mut table = Self::default();
        for (i, card) in cards.iter().enumerate() {
            let mut rng = GameRng::from_seed(derive_seed(seed, "similarity-table", i as u64));
            let mut words: Vec<&str> = VOCABULARY.to_vec();
            rng.shuffle(&mut words);
            let keys = table.scores.entry(card.id.clone()).or_default();
            for (word, weight) in words.iter().zip([0.9, 0.6, 0.3]) {
                keys.insert((*word).to_owned(), weight);
            }
            table
                .captions
                .insert(card.id.clone(), format!("{} {}", words[0], words[1]));
        }
        table
    }
}

/// Greedy agent over a [`SimilarityTable`]: argmax everywhere, lowest index on ties.
#[derive(Debug, Clone)]
pub struct TableAgent {
    table: Arc<SimilarityTable>,
}

impl TableAgent {
    pub fn new(table: Arc<SimilarityTable>) -> Self {
        Self { table }
    }

    fn best_match(&self, caption: &str, cards: &[Card]) -> Result<AgentReply, AgentError> {
        let scores: Vec<f64> = cards.iter().map(|c| self.table.score(&c.id, caption)).collect();
        let index = argmax(scores.iter().copied())
            .ok_or_else(|| AgentError::InvalidReply("no cards to choose from".into()))?;
        Ok(AgentReply::choice(
            index,
            format!("{} scores {:.3} for {caption:?}", cards[index].id, scores[index]),
        ))
    }

    fn caption_of(&self, card: &Card) -> Result<&str, AgentError> {
        self.table
            .caption_for(&card.id)
            .ok_or_else(|| AgentError::Config(format!("no caption for card {}", card.id)))
    }
}

impl Agent for TableAgent {
    fn select_story_card(&mut self, hand: &[Card]) -> Result<AgentReply, AgentError> {
        let mut scores = Vec::with_capacity(hand.len());
        for card in hand {
            scores.push(self.table.score(&card.id, self.caption_of(card)?));
        }
        let index = argmax(scores.iter().copied())
            .ok_or_else(|| AgentError::InvalidReply("empty hand".into()))?;
        Ok(AgentReply::choice(
            index,
            format!("{} fits its caption best ({:.3})", hand[index].id, scores[index]),
        ))
    }

    fn caption_card(&mut self, card: &Card) -> Result<AgentReply, AgentError> {
        let caption = self.caption_of(card)?.to_owned();
        Ok(AgentReply::caption(caption, format!("keyed caption for {}", card.id)))
    }

    fn select_decoy(&mut self, caption: &str, hand: &[Card]) -> Result<AgentReply, AgentError> {
        self.best_match(caption, hand)
    }

    fn vote(&mut self, caption: &str, pool: &[Card]) -> Result<AgentReply, AgentError> {
        self.best_match(caption, pool)
    }

    fn describe(&self) -> String {
        format!("table({} cards)", self.table.scores.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deck::synthetic_cards;

    fn table() -> SimilarityTable {
        let mut t = SimilarityTable::default();
        for (card, caption, entries) in [
            ("a", "owl at night", vec![("owl", 0.8), ("night", 0.4)]),
            ("b", "sunny day", vec![("owl", 0.2), ("sunny day", 1.0)]),
            ("c", "silent owl", vec![("owl", 0.8), ("night", 0.4)]),
        ] {
            t.captions.insert(card.into(), caption.into());
            t.scores.insert(
                card.into(),
                entries.into_iter().map(|(k, v)| (k.to_owned(), v)).collect(),
            );
        }
        t
    }

    fn cards(ids: &[&str]) -> Vec<Card> {
        ids.iter().map(|id| Card::new(*id, format!("{id}.png"))).collect()
    }

    #[test]
    fn exact_keys_win_then_token_mean() {
        let t = table();
        assert_eq!(t.score(&"b".into(), "  Sunny   DAY "), 1.0);
        assert!((t.score(&"a".into(), "Owl, night!") - 0.6).abs() < 1e-12);
        assert_eq!(t.score(&"a".into(), "zebra"), 0.0);
        assert_eq!(t.score(&"zzz".into(), "owl"), 0.0);
        assert_eq!(t.score(&"a".into(), "..."), 0.0);
    }

    #[test]
    fn decoy_and_vote_take_argmax_with_low_index_ties() {
        let mut agent = TableAgent::new(Arc::new(table()));
        let hand = cards(&["b", "a", "c"]);
        assert_eq!(agent.select_decoy("owl", &hand).unwrap().as_choice(), Some(1));
        assert_eq!(agent.vote("nothing matches", &hand).unwrap().as_choice(), Some(0));
        assert_eq!(agent.vote("owl", &cards(&["b"])).unwrap().as_choice(), Some(0));
    }

    #[test]
    fn story_card_is_best_self_match() {
        let mut agent = TableAgent::new(Arc::new(table()));
        let hand = cards(&["a", "b", "c"]);
        // b's caption has an exact 1.0 entry
        assert_eq!(agent.select_story_card(&hand).unwrap().as_choice(), Some(1));
        let caption = agent.caption_card(&hand[1]).unwrap();
        assert_eq!(caption.as_caption(), Some("sunny day"));
    }

    #[test]
    fn missing_caption_is_a_config_error() {
        let mut agent = TableAgent::new(Arc::new(table()));
        assert!(matches!(
            agent.caption_card(&Card::new("q", "q.png")),
            Err(AgentError::Config(_))
        ));
    }

    #[test]
    fn json_round_trip_and_range_check() {
        let t = SimilarityTable::synthetic(&synthetic_cards(10), 4);
        assert_eq!(SimilarityTable::from_json(&t.to_json()).unwrap(), t);
        let bad = r#"{"captions":{},"scores":{"a":{"owl":1.5}}}"#;
        assert!(matches!(
            SimilarityTable::from_json(bad),
            Err(TableError::OutOfRange { .. })
        ));
    }

    #[test]
    fn synthetic_captions_point_at_their_card() {
        let deck = synthetic_cards(40);
        let t = SimilarityTable::synthetic(&deck, 1);
        for card in &deck {
            let caption = t.caption_for(&card.id).unwrap();
            assert!((t.score(&card.id, caption) - 0.75).abs() < 1e-12);
        }
    }
}
