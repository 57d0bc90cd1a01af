//! Authoritative Dixit state machine.
//!
//! A round runs `AwaitingStory -> AwaitingDecoys -> AwaitingVotes ->
//! RoundComplete`, after which [`GameState::finish_round`] banks the points,
//! replenishes hands, rotates the storyteller and either starts the next
//! round or ends the game. Every operation validates fully before mutating,
//! so a rejected call leaves the state untouched.

mod error;
mod scoring;
mod types;
mod view;

use std::collections::{BTreeMap, HashSet};

pub use error::EngineError;
pub use scoring::{
    assemble_pool, final_ranking, is_game_over, normalize_caption, score_round, visible_pool_for,
};
pub use types::{
    ActionKind, EndReason, GameConfig, Phase, PlayerState, PoolEntry, Rationale, RoundRecord,
    VoteRecord, MAX_PLAYERS, MIN_PLAYERS,
};
pub use view::{PlayerView, RankLine, Reveal, RevealEntry, ScoreLine};

use serde::{Deserialize, Serialize};

use crate::deck::{Card, Deck};
use crate::ids::{CardId, PlayerId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct RoundInProgress {
    story_card: Option<CardId>,
    caption: Option<String>,
    /// Decoys keyed by roster index.
    decoys: BTreeMap<usize, CardId>,
    pool: Vec<PoolEntry>,
    votes: Vec<VoteRecord>,
    deltas: BTreeMap<PlayerId, u32>,
    rationales: Vec<Rationale>,
}

impl RoundInProgress {
    fn new() -> Self {
        Self {
            story_card: None,
            caption: None,
            decoys: BTreeMap::new(),
            pool: Vec::new(),
            votes: Vec::new(),
            deltas: BTreeMap::new(),
            rationales: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    config: GameConfig,
    roster: Vec<PlayerId>,
    players: Vec<PlayerState>,
    catalog: BTreeMap<CardId, Card>,
    deck: Deck,
    discard: Vec<CardId>,
    storyteller: usize,
    start_storyteller: usize,
    round_index: u32,
    phase: Phase,
    round: RoundInProgress,
    history: Vec<RoundRecord>,
    end_reason: Option<EndReason>,
}

impl GameState {
    /// Shuffle, deal and seat `roster[0]` as the first storyteller.
    pub fn new_game(
        config: GameConfig,
        manifest: &[Card],
        roster: &[PlayerId],
    ) -> Result<Self, EngineError> {
        Self::new_game_with_start(config, manifest, roster, 0)
    }

    pub fn new_game_with_start(
        config: GameConfig,
        manifest: &[Card],
        roster: &[PlayerId],
        start_storyteller: usize,
    ) -> Result<Self, EngineError> {
        config.validate()?;
        if roster.len() != config.num_players {
            return Err(EngineError::RosterSizeMismatch {
                expected: config.num_players,
                actual: roster.len(),
            });
        }
        let mut seen = HashSet::new();
        for p in roster {
            if !seen.insert(p) {
                return Err(EngineError::DuplicatePlayerId(p.clone()));
            }
        }
        let mut catalog = BTreeMap::new();
        for card in manifest {
            if card.image_ref.trim().is_empty() {
                return Err(EngineError::InvalidConfig(format!(
                    "card {} has an empty image_ref",
                    card.id
                )));
            }
            if catalog.insert(card.id.clone(), card.clone()).is_some() {
                return Err(EngineError::DuplicateCardId(card.id.clone()));
            }
        }
        if manifest.len() < config.min_deck_size() {
            return Err(EngineError::DeckTooSmall {
                needed: config.min_deck_size(),
                available: manifest.len(),
            });
        }
        if start_storyteller >= roster.len() {
            return Err(EngineError::InvalidConfig(format!(
                "start storyteller index {start_storyteller} out of range"
            )));
        }

        let mut deck = Deck::shuffled(manifest, config.shuffle_seed);
        let mut players: Vec<PlayerState> = roster
            .iter()
            .map(|p| PlayerState {
                player_id: p.clone(),
                hand: Vec::with_capacity(config.hand_size),
                score: 0,
            })
            .collect();
        for player in players.iter_mut() {
            for _ in 0..config.hand_size {
                let card = deck.draw().ok_or(EngineError::DeckExhaustedMidDraw)?;
                player.hand.push(card.id);
            }
        }

        Ok(Self {
            config,
            roster: roster.to_vec(),
            players,
            catalog,
            deck,
            discard: Vec::new(),
            storyteller: start_storyteller,
            start_storyteller,
            round_index: 0,
            phase: Phase::AwaitingStory,
            round: RoundInProgress::new(),
            history: Vec::new(),
            end_reason: None,
        })
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn roster(&self) -> &[PlayerId] {
        &self.roster
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn round_index(&self) -> u32 {
        self.round_index
    }

    pub fn storyteller(&self) -> &PlayerId {
        &self.roster[self.storyteller]
    }

    pub fn storyteller_index(&self) -> usize {
        self.storyteller
    }

    pub fn start_storyteller(&self) -> &PlayerId {
        &self.roster[self.start_storyteller]
    }

    pub fn players(&self) -> &[PlayerState] {
        &self.players
    }

    pub fn deck(&self) -> &Deck {
        &self.deck
    }

    pub fn undrawn(&self) -> usize {
        self.deck.undrawn()
    }

    pub fn discard(&self) -> &[CardId] {
        &self.discard
    }

    pub fn history(&self) -> &[RoundRecord] {
        &self.history
    }

    pub fn end_reason(&self) -> Option<EndReason> {
        self.end_reason
    }

    pub fn card(&self, id: &CardId) -> Option<&Card> {
        self.catalog.get(id)
    }

    pub fn caption(&self) -> Option<&str> {
        self.round.caption.as_deref()
    }

    pub fn story_card(&self) -> Option<&CardId> {
        self.round.story_card.as_ref()
    }

    pub(crate) fn staged_decoy(&self, seat: usize) -> Option<CardId> {
        self.round.decoys.get(&seat).cloned()
    }

    pub fn pool(&self) -> &[PoolEntry] {
        &self.round.pool
    }

    pub fn votes(&self) -> &[VoteRecord] {
        &self.round.votes
    }

    /// Points awarded by the round that just completed; empty before scoring.
    pub fn pending_deltas(&self) -> &BTreeMap<PlayerId, u32> {
        &self.round.deltas
    }

    pub fn scores(&self) -> Vec<(PlayerId, u32)> {
        self.players
            .iter()
            .map(|p| (p.player_id.clone(), p.score))
            .collect()
    }

    pub fn seat_of(&self, player: &PlayerId) -> Result<usize, EngineError> {
        self.roster
            .iter()
            .position(|p| p == player)
            .ok_or_else(|| EngineError::UnknownPlayer(player.clone()))
    }

    pub fn hand(&self, player: &PlayerId) -> Result<Vec<Card>, EngineError> {
        let seat = self.seat_of(player)?;
        Ok(self.cards_for(&self.players[seat].hand))
    }

    fn cards_for(&self, ids: &[CardId]) -> Vec<Card> {
        ids.iter()
            .map(|id| self.catalog[id].clone())
            .collect()
    }

    /// Whether `player` still owes an action in the current phase.
    pub fn is_pending(&self, player: &PlayerId) -> bool {
        let Ok(seat) = self.seat_of(player) else {
            return false;
        };
        match self.phase {
            Phase::AwaitingStory => seat == self.storyteller,
            Phase::AwaitingDecoys => seat != self.storyteller && !self.round.decoys.contains_key(&seat),
            Phase::AwaitingVotes => {
                seat != self.storyteller && !self.round.votes.iter().any(|v| &v.voter_id == player)
            }
            Phase::RoundComplete | Phase::GameOver => false,
        }
    }

    fn expect_phase(&self, expected: Phase) -> Result<(), EngineError> {
        if self.phase == expected {
            Ok(())
        } else {
            Err(EngineError::WrongPhase {
                expected,
                actual: self.phase,
            })
        }
    }

    fn hand_position(&self, seat: usize, card: &CardId) -> Result<usize, EngineError> {
        self.players[seat]
            .hand
            .iter()
            .position(|c| c == card)
            .ok_or_else(|| EngineError::CardNotInHand {
                player: self.roster[seat].clone(),
                card: card.clone(),
            })
    }

    pub fn submit_story(
        &mut self,
        storyteller: &PlayerId,
        card: &CardId,
        caption: &str,
        rationale: &str,
    ) -> Result<(), EngineError> {
        self.expect_phase(Phase::AwaitingStory)?;
        let seat = self.seat_of(storyteller)?;
        if seat != self.storyteller {
            return Err(EngineError::NotStoryteller(storyteller.clone()));
        }
        let pos = self.hand_position(seat, card)?;
        let caption = normalize_caption(caption);
        if caption.is_empty() {
            return Err(EngineError::EmptyCaption);
        }

        self.players[seat].hand.remove(pos);
        self.round.story_card = Some(card.clone());
        self.round.caption = Some(caption);
        if !rationale.is_empty() {
            self.round.rationales.push(Rationale {
                player_id: storyteller.clone(),
                action: ActionKind::StoryCaption,
                text: rationale.to_owned(),
                fallback: false,
            });
        }
        self.phase = Phase::AwaitingDecoys;
        Ok(())
    }

    pub fn submit_decoy(&mut self, player: &PlayerId, card: &CardId) -> Result<(), EngineError> {
        self.expect_phase(Phase::AwaitingDecoys)?;
        let seat = self.seat_of(player)?;
        if seat == self.storyteller {
            return Err(EngineError::StorytellerCannotDecoy);
        }
        if self.round.decoys.contains_key(&seat) {
            return Err(EngineError::AlreadySubmitted(player.clone()));
        }
        let pos = self.hand_position(seat, card)?;

        let pool = if self.round.decoys.len() + 1 == self.config.num_players - 1 {
            let mut staged = Vec::with_capacity(self.config.num_players);
            let story = self.round.story_card.clone().expect("story card staged");
            staged.push((self.roster[self.storyteller].clone(), story));
            for (s, p) in self.roster.iter().enumerate() {
                if s == self.storyteller {
                    continue;
                }
                let c = if s == seat {
                    card.clone()
                } else {
                    self.round.decoys[&s].clone()
                };
                staged.push((p.clone(), c));
            }
            Some(assemble_pool(
                &staged,
                self.config.num_players,
                self.config.pool_seed,
                self.round_index,
            )?)
        } else {
            None
        };

        self.players[seat].hand.remove(pos);
        self.round.decoys.insert(seat, card.clone());
        if let Some(pool) = pool {
            self.round.pool = pool;
            self.phase = Phase::AwaitingVotes;
        }
        Ok(())
    }

    /// Pool cards offered to `voter`, in pool order without their own card.
    pub fn visible_pool(&self, voter: &PlayerId) -> Result<Vec<Card>, EngineError> {
        self.expect_phase(Phase::AwaitingVotes)?;
        let ids = visible_pool_for(&self.round.pool, self.storyteller(), voter)?;
        Ok(self.cards_for(&ids))
    }

    pub fn submit_vote(&mut self, voter: &PlayerId, card: &CardId) -> Result<(), EngineError> {
        self.expect_phase(Phase::AwaitingVotes)?;
        let seat = self.seat_of(voter)?;
        if seat == self.storyteller {
            return Err(EngineError::StorytellerCannotVote);
        }
        if self.round.votes.iter().any(|v| &v.voter_id == voter) {
            return Err(EngineError::AlreadyVoted(voter.clone()));
        }
        let entry = self
            .round
            .pool
            .iter()
            .find(|e| &e.card_id == card)
            .ok_or_else(|| EngineError::CardNotInPool(card.clone()))?;
        if &entry.owner_id == voter {
            return Err(EngineError::OwnCardVote(voter.clone()));
        }

        let mut votes = self.round.votes.clone();
        votes.push(VoteRecord {
            voter_id: voter.clone(),
            chosen_card_id: card.clone(),
        });
        if votes.len() == self.config.num_players - 1 {
            let deltas = score_round(
                &self.round.pool,
                &votes,
                self.storyteller(),
                self.config.bonus_cap,
            )?;
            self.round.deltas = deltas;
            self.phase = Phase::RoundComplete;
        }
        self.round.votes = votes;
        Ok(())
    }

    /// Attach a rationale for an action in the current round.
    pub fn annotate(&mut self, player: &PlayerId, action: ActionKind, text: &str, fallback: bool) {
        if text.is_empty() && !fallback {
            return;
        }
        self.round.rationales.push(Rationale {
            player_id: player.clone(),
            action,
            text: text.to_owned(),
            fallback,
        });
    }

    /// Bank the round: add deltas, replenish from the storyteller onward,
    /// rotate the storyteller and check for game end.
    pub fn finish_round(&mut self) -> Result<RoundRecord, EngineError> {
        self.expect_phase(Phase::RoundComplete)?;
        let n = self.config.num_players;
        if self.deck.undrawn() < n {
            return Err(EngineError::DeckExhaustedMidDraw);
        }

        let round = std::mem::replace(&mut self.round, RoundInProgress::new());
        for player in self.players.iter_mut() {
            player.score += round.deltas.get(&player.player_id).copied().unwrap_or(0);
        }
        for offset in 0..n {
            let seat = (self.storyteller + offset) % n;
            let card = self.deck.draw().expect("undrawn checked above");
            self.players[seat].hand.push(card.id);
        }
        self.discard.extend(round.pool.iter().map(|e| e.card_id.clone()));

        let record = RoundRecord {
            round_index: self.round_index,
            storyteller_id: self.roster[self.storyteller].clone(),
            story_card_id: round.story_card.expect("story card staged"),
            caption: round.caption.expect("caption staged"),
            pool: round.pool,
            votes: round.votes,
            score_deltas: round.deltas,
            scores_after: self
                .players
                .iter()
                .map(|p| (p.player_id.clone(), p.score))
                .collect(),
            rationales: round.rationales,
        };
        self.history.push(record.clone());

        self.storyteller = (self.storyteller + 1) % n;
        self.round_index += 1;
        self.end_reason = is_game_over(
            self.players.iter().map(|p| &p.score),
            self.deck.undrawn(),
            &self.config,
        );
        self.phase = if self.end_reason.is_some() {
            Phase::GameOver
        } else {
            Phase::AwaitingStory
        };
        Ok(record)
    }

    pub fn final_ranking(&self) -> Vec<(PlayerId, f64)> {
        final_ranking(&self.scores())
    }

    /// Verify card conservation and hand invariants; returns a description of the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen: HashSet<&CardId> = HashSet::new();
        let mut all: Vec<(&CardId, &str)> = Vec::new();
        for p in &self.players {
            all.extend(p.hand.iter().map(|c| (c, "hand")));
        }
        all.extend(self.deck.remaining().iter().map(|c| (&c.id, "deck")));
        all.extend(self.discard.iter().map(|c| (c, "discard")));
        if self.phase != Phase::RoundComplete && self.phase != Phase::AwaitingVotes {
            all.extend(self.round.story_card.iter().map(|c| (c, "story")));
            all.extend(self.round.decoys.values().map(|c| (c, "decoy")));
        } else {
            all.extend(self.round.pool.iter().map(|e| (&e.card_id, "pool")));
        }
        for (id, place) in &all {
            if !seen.insert(id) {
                return Err(format!("card {id} appears twice (again in {place})"));
            }
            if !self.catalog.contains_key(id) {
                return Err(format!("card {id} not in manifest"));
            }
        }
        if seen.len() != self.catalog.len() {
            return Err(format!(
                "{} cards accounted for, manifest has {}",
                seen.len(),
                self.catalog.len()
            ));
        }

        let h = self.config.hand_size;
        for (seat, p) in self.players.iter().enumerate() {
            let played = match self.phase {
                Phase::AwaitingStory | Phase::GameOver => false,
                Phase::AwaitingDecoys => {
                    seat == self.storyteller || self.round.decoys.contains_key(&seat)
                }
                Phase::AwaitingVotes | Phase::RoundComplete => true,
            };
            let expected = if played { h - 1 } else { h };
            if p.hand.len() != expected {
                return Err(format!(
                    "{} holds {} cards, expected {expected}",
                    p.player_id,
                    p.hand.len()
                ));
            }
        }
        Ok(())
    }
}
