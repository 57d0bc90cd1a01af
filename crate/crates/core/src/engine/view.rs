use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::deck::Card;
use crate::engine::{EndReason, EngineError, GameState, Phase, RoundRecord};
use crate::ids::{CardId, PlayerId};

/// Everything one seat is allowed to know.
///
/// Other hands never appear. Pool owners and votes appear only inside
/// `reveal`, which is populated at `RoundComplete` and `GameOver`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayerView {
    pub player_id: PlayerId,
    pub phase: Phase,
    pub round_index: u32,
    pub storyteller_id: PlayerId,
    pub awaiting_you: bool,
    pub hand: Vec<Card>,
    pub caption: Option<String>,
    pub pool: Option<Vec<Card>>,
    pub your_card: Option<CardId>,
    pub your_vote: Option<CardId>,
    pub scores: Vec<ScoreLine>,
    pub undrawn: usize,
    pub reveal: Option<Reveal>,
    pub end_reason: Option<EndReason>,
    pub ranking: Option<Vec<RankLine>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreLine {
    pub player_id: PlayerId,
    pub score: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankLine {
    pub player_id: PlayerId,
    pub position: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reveal {
    pub round_index: u32,
    pub storyteller_id: PlayerId,
    pub story_card_id: CardId,
    pub caption: String,
    pub entries: Vec<RevealEntry>,
    pub score_deltas: BTreeMap<PlayerId, u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevealEntry {
    pub card: Card,
    pub owner_id: PlayerId,
    pub voters: Vec<PlayerId>,
}

impl GameState {
    pub fn view_for(&self, player: &PlayerId) -> Result<PlayerView, EngineError> {
        let seat = self.seat_of(player)?;
        let is_storyteller = seat == self.storyteller_index();
        let phase = self.phase();
        let in_round = matches!(
            phase,
            Phase::AwaitingDecoys | Phase::AwaitingVotes | Phase::RoundComplete
        );

        let caption = if in_round {
            self.caption().map(str::to_owned)
        } else {
            None
        };
        let pool = match phase {
            Phase::AwaitingVotes if is_storyteller => Some(
                self.pool()
                    .iter()
                    .map(|e| self.card(&e.card_id).expect("pool card in catalog").clone())
                    .collect(),
            ),
            Phase::AwaitingVotes => Some(self.visible_pool(player)?),
            _ => None,
        };
        let your_card = if !in_round {
            None
        } else if is_storyteller {
            self.story_card().cloned()
        } else {
            self.own_decoy(seat)
        };
        let your_vote = if matches!(phase, Phase::AwaitingVotes | Phase::RoundComplete) {
            self.votes()
                .iter()
                .find(|v| &v.voter_id == player)
                .map(|v| v.chosen_card_id.clone())
        } else {
            None
        };
        let reveal = match phase {
            Phase::RoundComplete => Some(self.current_reveal()),
            Phase::GameOver => self.history().last().map(|r| self.reveal_of(r)),
            _ => None,
        };
        let ranking = (phase == Phase::GameOver).then(|| {
            self.final_ranking()
                .into_iter()
                .map(|(player_id, position)| RankLine { player_id, position })
                .collect()
        });

        Ok(PlayerView {
            player_id: player.clone(),
            phase,
            round_index: self.round_index(),
            storyteller_id: self.storyteller().clone(),
            awaiting_you: self.is_pending(player),
            hand: self.hand(player)?,
            caption,
            pool,
            your_card,
            your_vote,
            scores: self
                .players()
                .iter()
                .map(|p| ScoreLine {
                    player_id: p.player_id.clone(),
                    score: p.score,
                })
                .collect(),
            undrawn: self.undrawn(),
            reveal,
            end_reason: self.end_reason(),
            ranking,
        })
    }

    fn own_decoy(&self, seat: usize) -> Option<CardId> {
        let player = &self.roster()[seat];
        if self.phase() == Phase::AwaitingDecoys {
            self.staged_decoy(seat)
        } else {
            self.pool()
                .iter()
                .find(|e| &e.owner_id == player)
                .map(|e| e.card_id.clone())
        }
    }

    fn current_reveal(&self) -> Reveal {
        Reveal {
            round_index: self.round_index(),
            storyteller_id: self.storyteller().clone(),
            story_card_id: self.story_card().cloned().expect("story card staged"),
            caption: self.caption().unwrap_or_default().to_owned(),
            entries: self.reveal_entries(self.pool(), self.votes()),
            score_deltas: self.pending_deltas().clone(),
        }
    }

    fn reveal_of(&self, record: &RoundRecord) -> Reveal {
        Reveal {
            round_index: record.round_index,
            storyteller_id: record.storyteller_id.clone(),
            story_card_id: record.story_card_id.clone(),
            caption: record.caption.clone(),
            entries: self.reveal_entries(&record.pool, &record.votes),
            score_deltas: record.score_deltas.clone(),
        }
    }

    fn reveal_entries(
        &self,
        pool: &[crate::engine::PoolEntry],
        votes: &[crate::engine::VoteRecord],
    ) -> Vec<RevealEntry> {
        pool.iter()
            .map(|e| RevealEntry {
                card: self.card(&e.card_id).expect("pool card in catalog").clone(),
                owner_id: e.owner_id.clone(),
                voters: votes
                    .iter()
                    .filter(|v| v.chosen_card_id == e.card_id)
                    .map(|v| v.voter_id.clone())
                    .collect(),
            })
            .collect()
    }
}
