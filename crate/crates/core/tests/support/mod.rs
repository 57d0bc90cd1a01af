//! Test oracles and fixtures shared by the integration and acceptance suites.
#![allow(dead_code)]

pub mod chat_server;
pub mod checks;
pub mod published;
pub mod replies;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use dixit_core::agents::{Agent, AgentError, AgentReply, SimilarityTable, TableAgent};
use dixit_core::deck::{synthetic_cards, Card};
use dixit_core::engine::{assemble_pool, score_round, GameConfig, GameState, Phase, VoteRecord};
use dixit_core::ids::{CardId, PlayerId};
use dixit_core::logstore::{GameLog, NullSink};
use dixit_core::runner::{play_game, GameSetup};

/// Round points written straight from the rulebook, with seats as plain
/// indices. `votes[s]` is the seat whose card seat `s` picked (`None` for
/// the storyteller).
pub fn oracle_deltas(n: usize, teller: usize, votes: &[Option<usize>]) -> Vec<u32> {
    let voters = n - 1;
    let found = votes.iter().filter(|v| **v == Some(teller)).count();
    let teller_points = if found == 0 || found == voters { 0 } else { 3 };
    let mut points = vec![0u32; n];
    points[teller] = teller_points;
    for seat in 0..n {
        if seat == teller {
            continue;
        }
        let guessed = votes[seat] == Some(teller);
        let base = if teller_points == 0 {
            2
        } else if guessed {
            3
        } else {
            0
        };
        let fooled = votes.iter().filter(|v| **v == Some(seat)).count() as u32;
        points[seat] = base + fooled;
    }
    points
}

/// Every legal vote assignment: each non-storyteller picks any seat but their own.
pub fn vote_assignments(n: usize, teller: usize) -> Vec<Vec<Option<usize>>> {
    let mut out = vec![vec![None; n]];
    for seat in 0..n {
        if seat == teller {
            continue;
        }
        let mut next = Vec::new();
        for partial in &out {
            for target in (0..n).filter(|&t| t != seat) {
                let mut v = partial.clone();
                v[seat] = Some(target);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Compare the engine's scoring against the oracle for every legal vote
/// assignment at `n` players, every storyteller seat and a few pool orders.
/// Returns the number of cases checked.
pub fn check_scoring_oracle(n: usize) -> Result<usize, String> {
    let players: Vec<PlayerId> = (0..n).map(|i| PlayerId::new(format!("p{i}"))).collect();
    let cards: Vec<CardId> = (0..n).map(|i| CardId::new(format!("card-of-p{i}"))).collect();
    let mut cases = 0;
    for teller in 0..n {
        let staged: Vec<(PlayerId, CardId)> = players.iter().cloned().zip(cards.iter().cloned()).collect();
        let pool = assemble_pool(&staged, n, 99, teller as u32).map_err(|e| e.to_string())?;
        for assignment in vote_assignments(n, teller) {
            let votes: Vec<VoteRecord> = assignment
                .iter()
                .enumerate()
                .filter_map(|(s, t)| {
                    t.map(|t| VoteRecord {
                        voter_id: players[s].clone(),
                        chosen_card_id: cards[t].clone(),
                    })
                })
                .collect();
            let got = score_round(&pool, &votes, &players[teller], None).map_err(|e| e.to_string())?;
            let want = oracle_deltas(n, teller, &assignment);
            for (s, p) in players.iter().enumerate() {
                if got.get(p).copied() != Some(want[s]) {
                    return Err(format!(
                        "n={n} teller={teller} votes={assignment:?}: {p} engine {:?}, oracle {}",
                        got.get(p),
                        want[s]
                    ));
                }
            }
            cases += 1;
        }
    }
    Ok(cases)
}

/// Agents that always find the storyteller's card: the storyteller shares its
/// pick through `slot`, decoys take the first hand card.
pub struct AllHit {
    slot: Arc<Mutex<Option<CardId>>>,
}

impl AllHit {
    pub fn team(n: usize) -> Vec<Box<dyn Agent>> {
        let slot = Arc::new(Mutex::new(None));
        (0..n)
            .map(|_| Box::new(AllHit { slot: slot.clone() }) as Box<dyn Agent>)
            .collect()
    }
}

impl Agent for AllHit {
    fn select_story_card(&mut self, _hand: &[Card]) -> Result<AgentReply, AgentError> {
        Ok(AgentReply::choice(0, "first card"))
    }

    fn caption_card(&mut self, card: &Card) -> Result<AgentReply, AgentError> {
        *self.slot.lock().unwrap() = Some(card.id.clone());
        Ok(AgentReply::caption("an open secret", "everyone will know"))
    }

    fn select_decoy(&mut self, _caption: &str, _hand: &[Card]) -> Result<AgentReply, AgentError> {
        Ok(AgentReply::choice(0, "any card"))
    }

    fn vote(&mut self, _caption: &str, pool: &[Card]) -> Result<AgentReply, AgentError> {
        let target = self.slot.lock().unwrap().clone();
        let index = pool
            .iter()
            .position(|c| Some(&c.id) == target.as_ref())
            .ok_or_else(|| AgentError::InvalidReply("story card not offered".into()))?;
        Ok(AgentReply::choice(index, "the shared card"))
    }

    fn describe(&self) -> String {
        "all-hit".into()
    }
}

pub fn roster(n: usize) -> Vec<PlayerId> {
    (1..=n).map(|i| PlayerId::new(format!("p{i}"))).collect()
}

pub const GOLDEN_SHUFFLE_SEED: u64 = 20_240_917;
pub const GOLDEN_POOL_SEED: u64 = 7_041_991;
pub const GOLDEN_TABLE_SEED: u64 = 314;

/// Four table agents over a 100-card synthetic deck with fixed seeds.
pub fn golden_setup() -> (GameSetup, Arc<SimilarityTable>) {
    let cards = synthetic_cards(100);
    let table = Arc::new(SimilarityTable::synthetic(&cards, GOLDEN_TABLE_SEED));
    let config = GameConfig {
        shuffle_seed: GOLDEN_SHUFFLE_SEED,
        pool_seed: GOLDEN_POOL_SEED,
        ..GameConfig::default()
    };
    let mut setup = GameSetup::new("golden", config, cards, roster(4));
    setup.start_storyteller = 1;
    (setup, table)
}

pub fn play_golden() -> GameLog {
    let (setup, table) = golden_setup();
    let mut agents: Vec<TableAgent> = (0..4).map(|_| TableAgent::new(table.clone())).collect();
    play_game(&setup, &mut agents, &mut NullSink).expect("golden game plays")
}

/// The core crate's directory, from whichever workspace crate includes this module.
pub fn core_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core")
}

pub fn golden_log_path() -> PathBuf {
    core_dir().join("tests/golden/table_game.jsonl")
}

fn collect_strings<'a>(value: &'a serde_json::Value, out: &mut Vec<&'a str>) {
    match value {
        serde_json::Value::String(s) => out.push(s),
        serde_json::Value::Array(items) => items.iter().for_each(|v| collect_strings(v, out)),
        serde_json::Value::Object(map) => map.values().for_each(|v| collect_strings(v, out)),
        _ => {}
    }
}

fn collect_keys<'a>(value: &'a serde_json::Value, out: &mut BTreeSet<&'a str>) {
    match value {
        serde_json::Value::Array(items) => items.iter().for_each(|v| collect_keys(v, out)),
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                out.insert(k);
                collect_keys(v, out);
            }
        }
        _ => {}
    }
}

/// Ways a payload sent to `viewer` leaks information it should not hold,
/// judged against the true state at the moment it was produced.
pub fn view_violations(state: &GameState, viewer: &PlayerId, payload: &serde_json::Value) -> Vec<String> {
    let mut problems = Vec::new();
    let mut strings = Vec::new();
    collect_strings(payload, &mut strings);
    let strings: BTreeSet<&str> = strings.into_iter().collect();

    for other in state.roster().iter().filter(|p| *p != viewer) {
        for card in state.hand(other).expect("seated player") {
            if strings.contains(card.id.as_str()) {
                problems.push(format!("{viewer} sees {other}'s hand card {}", card.id));
            }
        }
    }

    let revealed = matches!(state.phase(), Phase::RoundComplete | Phase::GameOver);
    if !revealed {
        let mut keys = BTreeSet::new();
        collect_keys(payload, &mut keys);
        for forbidden in ["owner_id", "voters", "votes", "score_deltas", "chosen_card_id"] {
            if keys.contains(forbidden) {
                problems.push(format!("{viewer} sees `{forbidden}` before the reveal"));
            }
        }
        if let Some(own_vote) = payload.get("your_vote").and_then(|v| v.as_str()) {
            let actual = state.votes().iter().find(|v| &v.voter_id == viewer);
            if actual.map(|v| v.chosen_card_id.as_str()) != Some(own_vote) {
                problems.push(format!("{viewer} is shown a vote that is not theirs"));
            }
        }
        if let Some(pool) = payload.get("pool").and_then(|p| p.as_array()) {
            if state.phase() == Phase::AwaitingVotes && viewer != state.storyteller() {
                if let Some(own) = state.pool().iter().find(|e| &e.owner_id == viewer) {
                    if pool.iter().any(|c| c.get("id").and_then(|v| v.as_str()) == Some(own.card_id.as_str())) {
                        problems.push(format!("{viewer}'s own card is offered in their vote view"));
                    }
                }
            }
        }
    }
    problems
}

/// Five hand-built rounds: storyteller `t`, voters `a`, `b`, `c`.
/// `a`/`b` pick the same card in rounds 0..=2, `a`/`c` in 0, 3, 4 and
/// `b`/`c` only in round 0. Captions hold 1, 5, 2, 3 and 1 tokens.
pub const ANALYSIS_CAPTIONS: [&str; 5] = ["Rapunzel", "Child reaching for the moon", "lost key", "x y z", "Freedom"];

pub fn analysis_fixture() -> GameLog {
    use dixit_core::engine::{PoolEntry, RoundRecord};
    let players: Vec<PlayerId> = ["t", "a", "b", "c"].into_iter().map(PlayerId::from).collect();
    let cards: Vec<Card> = (0..5)
        .flat_map(|r| players.iter().map(move |p| Card::new(format!("{p}-{r}"), format!("{p}-{r}.png"))))
        .collect();
    let setup = GameSetup::new("fixture", GameConfig::default(), cards, players.clone());
    let agents: Vec<String> = ["teller", "alpha", "beta", "gamma"].into_iter().map(String::from).collect();
    let header = setup.header(&agents);
    // per round, the owner each of a, b, c voted for
    let picks = [
        ["t", "t", "t"],
        ["c", "c", "a"],
        ["t", "t", "b"],
        ["t", "c", "t"],
        ["b", "a", "b"],
    ];
    let rounds = picks
        .iter()
        .enumerate()
        .map(|(r, pick)| {
            let card = |owner: &str| CardId::new(format!("{owner}-{r}"));
            RoundRecord {
                round_index: r as u32,
                storyteller_id: players[0].clone(),
                story_card_id: card("t"),
                caption: ANALYSIS_CAPTIONS[r].to_owned(),
                pool: players
                    .iter()
                    .enumerate()
                    .map(|(i, p)| PoolEntry {
                        card_id: card(p.as_str()),
                        owner_id: p.clone(),
                        pool_position: i,
                    })
                    .collect(),
                votes: players[1..]
                    .iter()
                    .zip(pick)
                    .map(|(v, owner)| VoteRecord {
                        voter_id: v.clone(),
                        chosen_card_id: card(owner),
                    })
                    .collect(),
                score_deltas: Default::default(),
                scores_after: Default::default(),
                rationales: Vec::new(),
            }
        })
        .collect();
    GameLog {
        header,
        rounds,
        footer: None,
    }
}
