//! Line-delimited game logs and exact replay.
//!
//! A log file holds one JSON object per line. The first line is the header,
//! then one line per finished round, then a footer:
//!
//! ```text
//! {"record":"header","schema":"dixit-log/1","game_id":...,"config":{...},...}
//! {"record":"round","round_index":0,"storyteller_id":...,"pool":[...],...}
//! {"record":"footer","final_scores":{...},"end_reason":"Threshold",...}
//! ```
//!
//! Every line is flushed as soon as it is written, so a log cut at any line
//! boundary is still a valid prefix. A file whose last line lacks its newline
//! was interrupted mid-write and is rejected as corrupt.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deck::{manifest_digest, Card};
use crate::engine::{EndReason, EngineError, GameConfig, GameState, RoundRecord};
use crate::ids::{CardId, PlayerId};

pub const LOG_SCHEMA: &str = "dixit-log/1";
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const LOG_EXTENSION: &str = "jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeatInfo {
    pub player_id: PlayerId,
    pub agent: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub schema: String,
    pub game_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game_index: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game_seed: Option<u64>,
    pub engine_version: String,
    pub prng: String,
    pub config: GameConfig,
    pub manifest_digest: String,
    pub manifest: Vec<Card>,
    pub seats: Vec<SeatInfo>,
    pub start_storyteller: PlayerId,
}

impl LogHeader {
    pub fn roster(&self) -> Vec<PlayerId> {
        self.seats.iter().map(|s| s.player_id.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub player_id: PlayerId,
    pub position: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogFooter {
    pub final_scores: BTreeMap<PlayerId, u32>,
    pub end_reason: EndReason,
    pub ranking: Vec<RankEntry>,
    pub rounds: u32,
    pub fallbacks: BTreeMap<PlayerId, usize>,
}

impl LogFooter {
    /// Footer for a finished game, derived from the engine state.
    pub fn from_state(state: &GameState) -> Option<Self> {
        let end_reason = state.end_reason()?;
        let mut fallbacks: BTreeMap<PlayerId, usize> =
            state.roster().iter().map(|p| (p.clone(), 0)).collect();
        for round in state.history() {
            for r in round.rationales.iter().filter(|r| r.fallback) {
                *fallbacks.entry(r.player_id.clone()).or_default() += 1;
            }
        }
        Some(Self {
            final_scores: state.scores().into_iter().collect(),
            end_reason,
            ranking: state
                .final_ranking()
                .into_iter()
                .map(|(player_id, position)| RankEntry { player_id, position })
                .collect(),
            rounds: state.history().len() as u32,
            fallbacks,
        })
    }

    pub fn position_of(&self, player: &PlayerId) -> Option<f64> {
        self.ranking
            .iter()
            .find(|r| &r.player_id == player)
            .map(|r| r.position)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogRecord {
    Header(LogHeader),
    Round(RoundRecord),
    Footer(LogFooter),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameLog {
    pub header: LogHeader,
    pub rounds: Vec<RoundRecord>,
    pub footer: Option<LogFooter>,
}

impl GameLog {
    pub fn is_complete(&self) -> bool {
        self.footer.is_some()
    }

    /// Serialize to the on-disk text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&encode_record(&LogRecord::Header(self.header.clone())));
        for round in &self.rounds {
            out.push_str(&encode_record(&LogRecord::Round(round.clone())));
        }
        if let Some(footer) = &self.footer {
            out.push_str(&encode_record(&LogRecord::Footer(footer.clone())));
        }
        out
    }
}

/// One record as a single newline-terminated line.
pub fn encode_record(record: &LogRecord) -> String {
    let mut line = serde_json::to_string(record).expect("log records serialize");
    line.push('\n');
    line
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log io: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt log at line {line}: {detail}")]
    CorruptLog { line: usize, detail: String },
    #[error("log is incomplete (no footer); replay needs a finished game")]
    Incomplete,
    #[error("log was written for a different deck (digest {expected}, found {actual})")]
    ManifestMismatch { expected: String, actual: String },
    #[error("replay diverges at {}: {detail}", match .round_index { Some(r) => format!("round {r}"), None => "footer".to_owned() })]
    ReplayDivergence {
        /// First divergent round; `None` when only the footer disagrees.
        round_index: Option<u32>,
        detail: String,
    },
}

impl LogError {
    fn corrupt(line: usize, detail: impl Into<String>) -> Self {
        Self::CorruptLog {
            line,
            detail: detail.into(),
        }
    }
}

/// Receives log records as a game progresses.
pub trait LogSink {
    fn header(&mut self, header: &LogHeader) -> io::Result<()>;
    fn round(&mut self, record: &RoundRecord) -> io::Result<()>;
    fn footer(&mut self, footer: &LogFooter) -> io::Result<()>;
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl LogSink for NullSink {
    fn header(&mut self, _: &LogHeader) -> io::Result<()> {
        Ok(())
    }
    fn round(&mut self, _: &RoundRecord) -> io::Result<()> {
        Ok(())
    }
    fn footer(&mut self, _: &LogFooter) -> io::Result<()> {
        Ok(())
    }
}

/// Writes records as JSON lines, flushing after each one.
pub struct JsonlSink<W: Write> {
    out: W,
}

impl<W: Write> JsonlSink<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }

    fn write(&mut self, record: &LogRecord) -> io::Result<()> {
        self.out.write_all(encode_record(record).as_bytes())?;
        self.out.flush()
    }

    /// Append one finished round.
    pub fn append_round(&mut self, record: &RoundRecord) -> io::Result<()> {
        self.write(&LogRecord::Round(record.clone()))
    }
}

impl JsonlSink<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>) -> io::Result<Self> {
        Ok(Self::new(BufWriter::new(File::create(path)?)))
    }
}

impl<W: Write> LogSink for JsonlSink<W> {
    fn header(&mut self, header: &LogHeader) -> io::Result<()> {
        self.write(&LogRecord::Header(header.clone()))
    }
    fn round(&mut self, record: &RoundRecord) -> io::Result<()> {
        self.append_round(record)
    }
    fn footer(&mut self, footer: &LogFooter) -> io::Result<()> {
        self.write(&LogRecord::Footer(footer.clone()))
    }
}

pub fn load(path: impl AsRef<Path>) -> Result<GameLog, LogError> {
    parse_log(&std::fs::read_to_string(path)?)
}

pub fn parse_log(text: &str) -> Result<GameLog, LogError> {
    if text.is_empty() {
        return Err(LogError::corrupt(1, "empty log"));
    }
    let line_count = text.lines().count();
    if !text.ends_with('\n') {
        return Err(LogError::corrupt(line_count, "last line is truncated"));
    }

    let mut header: Option<LogHeader> = None;
    let mut rounds: Vec<RoundRecord> = Vec::new();
    let mut footer: Option<LogFooter> = None;
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let record: LogRecord =
            serde_json::from_str(line).map_err(|e| LogError::corrupt(n, e.to_string()))?;
        if footer.is_some() {
            return Err(LogError::corrupt(n, "record after footer"));
        }
        match (record, &header) {
            (LogRecord::Header(h), None) => {
                if h.schema != LOG_SCHEMA {
                    return Err(LogError::corrupt(n, format!("unsupported schema {:?}", h.schema)));
                }
                header = Some(h);
            }
            (LogRecord::Header(_), Some(_)) => return Err(LogError::corrupt(n, "second header")),
            (_, None) => return Err(LogError::corrupt(n, "first record must be the header")),
            (LogRecord::Round(r), Some(_)) => {
                if r.round_index as usize != rounds.len() {
                    return Err(LogError::corrupt(
                        n,
                        format!("round {} out of sequence (expected {})", r.round_index, rounds.len()),
                    ));
                }
                rounds.push(r);
            }
            (LogRecord::Footer(f), Some(_)) => footer = Some(f),
        }
    }
    Ok(GameLog {
        header: header.expect("non-empty log has a header"),
        rounds,
        footer,
    })
}

/// Log files (`*.jsonl`) directly inside `dir`, sorted by name.
pub fn log_files(dir: impl AsRef<Path>) -> io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().and_then(|e| e.to_str()) == Some(LOG_EXTENSION))
        .collect();
    files.sort();
    Ok(files)
}

/// Load every log in `dir`. Unreadable files are returned as errors alongside their path.
pub fn load_dir(dir: impl AsRef<Path>) -> io::Result<Vec<(PathBuf, Result<GameLog, LogError>)>> {
    Ok(log_files(dir)?
        .into_iter()
        .map(|p| {
            let log = load(&p);
            (p, log)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub game_id: String,
    pub rounds_checked: u32,
    pub end_reason: EndReason,
    pub final_scores: BTreeMap<PlayerId, u32>,
}

/// Check that the log's deck matches `manifest`.
pub fn verify_manifest(log: &GameLog, manifest: &[Card]) -> Result<(), LogError> {
    let actual = manifest_digest(manifest);
    if actual != log.header.manifest_digest {
        return Err(LogError::ManifestMismatch {
            expected: log.header.manifest_digest.clone(),
            actual,
        });
    }
    Ok(())
}

fn diverge(round: u32, detail: impl Into<String>) -> LogError {
    LogError::ReplayDivergence {
        round_index: Some(round),
        detail: detail.into(),
    }
}

fn engine_step(round: u32, what: &str, r: Result<(), EngineError>) -> Result<(), LogError> {
    r.map_err(|e| diverge(round, format!("{what} rejected by engine: {e}")))
}

/// Re-run the engine from the header, feeding it the decisions recorded in
/// each round, and require every recorded outcome to match.
pub fn replay(log: &GameLog) -> Result<ReplayReport, LogError> {
    let footer = log.footer.as_ref().ok_or(LogError::Incomplete)?;
    let header = &log.header;
    verify_manifest(log, &header.manifest)?;

    let roster = header.roster();
    let start = roster
        .iter()
        .position(|p| p == &header.start_storyteller)
        .ok_or_else(|| LogError::corrupt(1, "start storyteller is not seated"))?;
    let mut state = GameState::new_game_with_start(header.config.clone(), &header.manifest, &roster, start)
        .map_err(|e| LogError::corrupt(1, format!("header does not start a game: {e}")))?;

    for recorded in &log.rounds {
        let r = recorded.round_index;
        if state.phase() == crate::engine::Phase::GameOver {
            return Err(diverge(r, "engine ended the game before this round"));
        }
        if state.storyteller() != &recorded.storyteller_id {
            return Err(diverge(
                r,
                format!(
                    "storyteller is {} but log says {}",
                    state.storyteller(),
                    recorded.storyteller_id
                ),
            ));
        }
        // Rationales are re-attached through annotate below, in recorded order.
        engine_step(
            r,
            "story",
            state.submit_story(&recorded.storyteller_id, &recorded.story_card_id, &recorded.caption, ""),
        )?;
        for player in &roster {
            if player == &recorded.storyteller_id {
                continue;
            }
            let card: &CardId = recorded
                .pool
                .iter()
                .find(|e| &e.owner_id == player)
                .map(|e| &e.card_id)
                .ok_or_else(|| diverge(r, format!("pool has no card from {player}")))?;
            engine_step(r, "decoy", state.submit_decoy(player, card))?;
        }
        for vote in &recorded.votes {
            engine_step(r, "vote", state.submit_vote(&vote.voter_id, &vote.chosen_card_id))?;
        }
        for x in &recorded.rationales {
            state.annotate(&x.player_id, x.action, &x.text, x.fallback);
        }
        let replayed = state
            .finish_round()
            .map_err(|e| diverge(r, format!("round did not complete: {e}")))?;
        compare_round(recorded, &replayed)?;
    }

    let replayed_footer = LogFooter::from_state(&state)
        .ok_or_else(|| diverge(log.rounds.len() as u32, "engine did not end the game where the log ends"))?;
    if &replayed_footer != footer {
        return Err(LogError::ReplayDivergence {
            round_index: None,
            detail: format!(
                "footer differs: replay {:?}/{:?}, log {:?}/{:?}",
                replayed_footer.end_reason,
                replayed_footer.final_scores,
                footer.end_reason,
                footer.final_scores
            ),
        });
    }
    Ok(ReplayReport {
        game_id: header.game_id.clone(),
        rounds_checked: log.rounds.len() as u32,
        end_reason: replayed_footer.end_reason,
        final_scores: replayed_footer.final_scores,
    })
}

fn compare_round(recorded: &RoundRecord, replayed: &RoundRecord) -> Result<(), LogError> {
    let r = recorded.round_index;
    if recorded.round_index != replayed.round_index {
        return Err(diverge(r, format!("replay is at round {}", replayed.round_index)));
    }
    if recorded.pool != replayed.pool {
        return Err(diverge(r, "pool order differs"));
    }
    if recorded.score_deltas != replayed.score_deltas {
        return Err(diverge(
            r,
            format!(
                "score deltas differ: replay {:?}, log {:?}",
                replayed.score_deltas, recorded.score_deltas
            ),
        ));
    }
    if recorded.scores_after != replayed.scores_after {
        return Err(diverge(
            r,
            format!(
                "scores differ: replay {:?}, log {:?}",
                replayed.scores_after, recorded.scores_after
            ),
        ));
    }
    if recorded != replayed {
        return Err(diverge(r, "round record differs"));
    }
    Ok(())
}
