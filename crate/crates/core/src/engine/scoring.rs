use std::collections::{BTreeMap, HashSet};

use crate::engine::{EndReason, EngineError, GameConfig, PoolEntry, VoteRecord};
use crate::ids::{CardId, PlayerId};
use crate::ranks::{fractional_ranks, Order};
use crate::rng::{derive_seed, GameRng};

/// Shuffle the staged cards into pool order.
///
/// `staged` must be in canonical order (storyteller first, then the
/// remaining players in roster order) so the result does not depend on the
/// order in which submissions arrived. The permutation is keyed by
/// `(pool_seed, round_index)`.
pub fn assemble_pool(
    staged: &[(PlayerId, CardId)],
    expected: usize,
    pool_seed: u64,
    round_index: u32,
) -> Result<Vec<PoolEntry>, EngineError> {
    if staged.len() != expected {
        return Err(EngineError::WrongCardCount {
            expected,
            actual: staged.len(),
        });
    }
    let mut owners = HashSet::new();
    let mut cards = HashSet::new();
    for (owner, card) in staged {
        if !owners.insert(owner) {
            return Err(EngineError::AlreadySubmitted(owner.clone()));
        }
        if !cards.insert(card) {
            return Err(EngineError::DuplicateCardId(card.clone()));
        }
    }

    let mut order: Vec<usize> = (0..staged.len()).collect();
    GameRng::from_seed(derive_seed(pool_seed, "pool", round_index as u64)).shuffle(&mut order);
    Ok(order
        .into_iter()
        .enumerate()
        .map(|(pool_position, i)| PoolEntry {
            card_id: staged[i].1.clone(),
            owner_id: staged[i].0.clone(),
            pool_position,
        })
        .collect())
}

/// The pool as one voter sees it: their own card removed, owners dropped.
pub fn visible_pool_for(
    pool: &[PoolEntry],
    storyteller: &PlayerId,
    voter: &PlayerId,
) -> Result<Vec<CardId>, EngineError> {
    if voter == storyteller {
        return Err(EngineError::StorytellerHasNoVoteView);
    }
    if !pool.iter().any(|e| &e.owner_id == voter) {
        return Err(EngineError::UnknownPlayer(voter.clone()));
    }
    Ok(pool
        .iter()
        .filter(|e| &e.owner_id != voter)
        .map(|e| e.card_id.clone())
        .collect())
}

/// Points earned this round by every pool owner.
///
/// With `k` voters and `V` votes on the storyteller's card, the storyteller
/// scores 3 unless `V == 0` or `V == k`. A non-storyteller scores 2 when the
/// storyteller scored nothing, otherwise 3 for a correct guess and 0 for a miss,
/// plus one point per vote on their own card (optionally capped).
pub fn score_round(
    pool: &[PoolEntry],
    votes: &[VoteRecord],
    storyteller: &PlayerId,
    bonus_cap: Option<u32>,
) -> Result<BTreeMap<PlayerId, u32>, EngineError> {
    let voters = pool.len().saturating_sub(1);
    if votes.len() != voters {
        return Err(EngineError::IncompleteVotes {
            expected: voters,
            actual: votes.len(),
        });
    }
    let story_card = pool
        .iter()
        .find(|e| &e.owner_id == storyteller)
        .map(|e| &e.card_id)
        .ok_or_else(|| EngineError::MalformedVote("storyteller has no card in the pool".into()))?;

    let mut seen = HashSet::new();
    let mut received: BTreeMap<&PlayerId, u32> = BTreeMap::new();
    let mut hits = 0usize;
    for vote in votes {
        if &vote.voter_id == storyteller {
            return Err(EngineError::MalformedVote("storyteller cast a vote".into()));
        }
        if !seen.insert(&vote.voter_id) {
            return Err(EngineError::MalformedVote(format!("{} voted twice", vote.voter_id)));
        }
        let own = pool.iter().find(|e| e.owner_id == vote.voter_id).ok_or_else(|| {
            EngineError::MalformedVote(format!("{} has no card in the pool", vote.voter_id))
        })?;
        let target = pool
            .iter()
            .find(|e| e.card_id == vote.chosen_card_id)
            .ok_or_else(|| {
                EngineError::MalformedVote(format!("{} is not in the pool", vote.chosen_card_id))
            })?;
        if own.card_id == target.card_id {
            return Err(EngineError::MalformedVote(format!("{} voted for their own card", vote.voter_id)));
        }
        if &target.card_id == story_card {
            hits += 1;
        } else {
            *received.entry(&target.owner_id).or_default() += 1;
        }
    }

    let storyteller_scores = hits != 0 && hits != voters;
    let mut deltas = BTreeMap::new();
    deltas.insert(storyteller.clone(), if storyteller_scores { 3 } else { 0 });
    for vote in votes {
        let base = if !storyteller_scores {
            2
        } else if &vote.chosen_card_id == story_card {
            3
        } else {
            0
        };
        let mut bonus = received.get(&vote.voter_id).copied().unwrap_or(0);
        if let Some(cap) = bonus_cap {
            bonus = bonus.min(cap);
        }
        deltas.insert(vote.voter_id.clone(), base + bonus);
    }
    Ok(deltas)
}

/// End-of-round check: the threshold wins over deck exhaustion when both hold.
pub fn is_game_over<'a>(
    scores: impl IntoIterator<Item = &'a u32>,
    undrawn: usize,
    config: &GameConfig,
) -> Option<EndReason> {
    if scores.into_iter().any(|&s| s >= config.win_threshold) {
        Some(EndReason::Threshold)
    } else if undrawn < config.num_players {
        Some(EndReason::DeckEmpty)
    } else {
        None
    }
}

/// Final positions (1 = best) in input order; ties share the average position.
pub fn final_ranking(scores: &[(PlayerId, u32)]) -> Vec<(PlayerId, f64)> {
    let values: Vec<f64> = scores.iter().map(|(_, s)| *s as f64).collect();
    scores
        .iter()
        .zip(fractional_ranks(&values, Order::Descending))
        .map(|((p, _), rank)| (p.clone(), rank))
        .collect()
}

const QUOTES: &[char] = &['"', '\'', '`', '\u{201c}', '\u{201d}', '\u{2018}', '\u{2019}'];

/// Trim surrounding whitespace and wrapping quote characters; interior text is kept.
pub fn normalize_caption(raw: &str) -> String {
    let mut s = raw.trim();
    loop {
        let next = s.trim_matches(QUOTES).trim();
        if next.len() == s.len() {
            break;
        }
        s = next;
    }
    s.to_owned()
}
