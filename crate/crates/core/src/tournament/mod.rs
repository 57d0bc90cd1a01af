//! Repeated games over a fixed roster, metrics and rank correlation.
//!
//! A tournament spec is a TOML file:
//!
//! ```toml
//! games = 20
//! base_seed = 7
//! parallelism = 4
//!
//! [deck]
//! path = "deck"          # directory holding index.csv, relative to the spec
//! # synthetic = 100      # or generated cards without images
//!
//! [game]                 # any GameConfig field; seeds are set per game
//! num_players = 4
//! hand_size = 6
//! win_threshold = 30
//!
//! [table]                # shared by all `table` seats
//! # path = "table.json"
//! seed = 0               # synthetic table over the deck when no path is given
//!
//! [[seat]]
//! id = "random"
//! kind = "random"
//!
//! [[seat]]
//! id = "model"
//! kind = "remote"
//! [seat.endpoint]
//! base_url = "http://localhost:8000/v1"
//! model = "some-model"
//! ```
//!
//! Game `i` uses `game_seed = derive_seed(base_seed, "game", i)`, and from it
//! the deck shuffle (`"deck"`), pool shuffles (`"pool"`), starting storyteller
//! (`"start"`, reduced modulo the player count) and each seat's agent seed
//! (`"agent"`, indexed by seat).

mod correlation;
mod metrics;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use correlation::{kendall_tau, spearman_rho, CorrelationError};
pub use metrics::{rank_by, rank_values, GameResult, Metric, MetricsError, MetricsReport, PlayerMetrics};

use crate::agents::{
    Agent, AgentError, AuditSink, EndpointConfig, RandomAgent, RemoteAgent, SimilarityTable, TableAgent,
    TableError,
};
use crate::deck::{synthetic_cards, Card, Manifest, ManifestError};
use crate::engine::{EngineError, GameConfig};
use crate::ids::PlayerId;
use crate::logstore::{GameLog, JsonlSink, NullSink, LOG_EXTENSION};
use crate::rng::derive_seed;
use crate::runner::{play_game, GameSetup, RunError};

fn default_parallelism() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeckSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeatKind {
    Random,
    Table,
    Remote { endpoint: EndpointConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeatSpec {
    pub id: PlayerId,
    #[serde(flatten)]
    pub kind: SeatKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TournamentSpec {
    pub games: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    pub deck: DeckSpec,
    #[serde(default)]
    pub game: GameConfig,
    #[serde(default)]
    pub table: TableSpec,
    #[serde(rename = "seat")]
    pub seats: Vec<SeatSpec>,
    /// Directory relative paths resolve against; set by [`TournamentSpec::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Error)]
pub enum TournamentError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing tournament spec: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid tournament spec: {0}")]
    Invalid(String),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TournamentError + '_ {
    move |source| TournamentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl TournamentSpec {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, TournamentError> {
        let mut spec: Self = toml::from_str(text)?;
        spec.base_dir = base_dir.into();
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TournamentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, dir)
    }

    pub fn validate(&self) -> Result<(), TournamentError> {
        if self.games == 0 {
            return Err(TournamentError::Invalid("games must be at least 1".into()));
        }
        if self.parallelism == 0 {
            return Err(TournamentError::Invalid("parallelism must be at least 1".into()));
        }
        if self.seats.len() != self.game.num_players {
            return Err(TournamentError::Invalid(format!(
                "{} seats but game.num_players = {}",
                self.seats.len(),
                self.game.num_players
            )));
        }
        match (&self.deck.path, self.deck.synthetic) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => {
                return Err(TournamentError::Invalid(
                    "deck needs exactly one of `path` or `synthetic`".into(),
                ))
            }
        }
        self.game.validate()?;
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn roster(&self) -> Vec<PlayerId> {
        self.seats.iter().map(|s| s.id.clone()).collect()
    }

    /// The deck's cards and the directory their images live in.
    pub fn load_deck(&self) -> Result<(Vec<Card>, Option<PathBuf>), TournamentError> {
        match (&self.deck.path, self.deck.synthetic) {
            (Some(path), _) => {
                let manifest = Manifest::load(self.resolve(path))?;
                Ok((manifest.cards, Some(manifest.root)))
            }
            (None, Some(count)) => Ok((synthetic_cards(count), None)),
            (None, None) => Err(TournamentError::Invalid("no deck".into())),
        }
    }

    pub fn load_table(&self, cards: &[Card]) -> Result<SimilarityTable, TournamentError> {
        match &self.table.path {
            Some(path) => Ok(SimilarityTable::load(self.resolve(path))?),
            None => Ok(SimilarityTable::synthetic(cards, self.table.seed)),
        }
    }
}

/// Seeds and setup for one game of a tournament.
#[derive(Debug, Clone, PartialEq)]
pub struct GamePlan {
    pub index: u64,
    pub setup: GameSetup,
    pub agent_seeds: Vec<u64>,
}

impl GamePlan {
    pub fn file_name(&self) -> String {
        format!("{}.{LOG_EXTENSION}", self.setup.game_id)
    }
}

pub fn plan_games(
    games: usize,
    base_seed: u64,
    config: &GameConfig,
    manifest: &[Card],
    roster: &[PlayerId],
) -> Vec<GamePlan> {
    (0..games as u64)
        .map(|index| {
            let game_seed = derive_seed(base_seed, "game", index);
            let mut config = config.clone();
            config.shuffle_seed = derive_seed(game_seed, "deck", 0);
            config.pool_seed = derive_seed(game_seed, "pool", 0);
            let start = (derive_seed(game_seed, "start", 0) % roster.len() as u64) as usize;
            let mut setup = GameSetup::new(
                format!("game-{index:04}"),
                config,
                manifest.to_vec(),
                roster.to_vec(),
            );
            setup.game_index = Some(index);
            setup.game_seed = Some(game_seed);
            setup.start_storyteller = start;
            GamePlan {
                index,
                setup,
                agent_seeds: (0..roster.len() as u64)
                    .map(|seat| derive_seed(game_seed, "agent", seat))
                    .collect(),
            }
        })
        .collect()
}

#[derive(Debug)]
pub struct GameOutcome {
    pub index: u64,
    pub game_id: String,
    pub log_path: Option<PathBuf>,
    pub result: Result<GameLog, RunError>,
}

#[derive(Debug)]
pub struct TournamentResult {
    pub report: MetricsReport,
    pub outcomes: Vec<GameOutcome>,
}

impl TournamentResult {
    pub fn failures(&self) -> impl Iterator<Item = &GameOutcome> {
        self.outcomes.iter().filter(|o| o.result.is_err())
    }

    pub fn logs(&self) -> impl Iterator<Item = &GameLog> {
        self.outcomes.iter().filter_map(|o| o.result.as_ref().ok())
    }
}

/// Play every plan with up to `parallelism` games at once. Outcomes come back
/// in plan order whatever the scheduling. When `out_dir` is given each game is
/// logged to `<game_id>.jsonl` inside it.
pub fn run_plans<F>(
    plans: &[GamePlan],
    parallelism: usize,
    out_dir: Option<&Path>,
    make_agents: F,
) -> Vec<GameOutcome>
where
    F: Fn(&GamePlan) -> Result<Vec<Box<dyn Agent>>, AgentError> + Sync,
{
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<GameOutcome>>> = plans.iter().map(|_| Mutex::new(None)).collect();
    let workers = parallelism.clamp(1, plans.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(plan) = plans.get(i) else { break };
                let outcome = run_one(plan, out_dir, &make_agents);
                *slots[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(outcome);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| {
            s.into_inner()
                .unwrap_or_else(|e| e.into_inner())
                .expect("every plan was run")
        })
        .collect()
}

fn run_one<F>(plan: &GamePlan, out_dir: Option<&Path>, make_agents: &F) -> GameOutcome
where
    F: Fn(&GamePlan) -> Result<Vec<Box<dyn Agent>>, AgentError>,
{
    let game_id = plan.setup.game_id.clone();
    let log_path = out_dir.map(|d| d.join(plan.file_name()));
    let result = (|| {
        let mut agents = make_agents(plan).map_err(|source| RunError::Agent {
            player: PlayerId::from("<setup>"),
            source,
        })?;
        match &log_path {
            Some(path) => {
                let mut sink = JsonlSink::new(BufWriter::new(File::create(path)?));
                play_game(&plan.setup, &mut agents, &mut sink)
            }
            None => play_game(&plan.setup, &mut agents, &mut NullSink),
        }
    })();
    if let Err(e) = &result {
        tracing::warn!(game = %game_id, "game failed and is excluded from the report: {e}");
    }
    GameOutcome {
        index: plan.index,
        game_id,
        log_path,
        result,
    }
}

/// Aggregate finished games; failed ones are excluded and counted.
pub fn summarize(outcomes: Vec<GameOutcome>) -> Result<TournamentResult, TournamentError> {
    let failed = outcomes.iter().filter(|o| o.result.is_err()).count();
    let results: Vec<GameResult> = outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().ok())
        .filter_map(GameResult::from_log)
        .collect();
    let report = MetricsReport::from_results(&results, failed)?;
    Ok(TournamentResult { report, outcomes })
}

/// Run a spec end to end, writing logs (and the remote audit trail, if any
/// seat is remote) into `out_dir`.
pub fn run_tournament(spec: &TournamentSpec, out_dir: &Path) -> Result<TournamentResult, TournamentError> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let (cards, image_root) = spec.load_deck()?;
    let table = if spec.seats.iter().any(|s| s.kind == SeatKind::Table) {
        Some(Arc::new(spec.load_table(&cards)?))
    } else {
        None
    };
    let audit = if spec.seats.iter().any(|s| matches!(s.kind, SeatKind::Remote { .. })) {
        let path = out_dir.join("audit.jsonl");
        Some(AuditSink::new(File::create(&path).map_err(io_err(&path))?))
    } else {
        None
    };

    let plans = plan_games(spec.games, spec.base_seed, &spec.game, &cards, &spec.roster());
    let outcomes = run_plans(&plans, spec.parallelism, Some(out_dir), |plan| {
        spec.seats
            .iter()
            .zip(&plan.agent_seeds)
            .map(|(seat, &seed)| -> Result<Box<dyn Agent>, AgentError> {
                Ok(match &seat.kind {
                    SeatKind::Random => Box::new(RandomAgent::new(seed)),
                    SeatKind::Table => Box::new(TableAgent::new(table.clone().expect("table loaded"))),
                    SeatKind::Remote { endpoint } => {
                        let mut agent = RemoteAgent::over_http(
                            format!("{}/{}", plan.setup.game_id, seat.id),
                            endpoint.clone(),
                            plan.setup.config.agent_retry_limit,
                            seed,
                        )?;
                        if let Some(root) = &image_root {
                            agent = agent.with_image_root(root);
                        }
                        if let Some(audit) = &audit {
                            agent = agent.with_audit(audit.clone());
                        }
                        Box::new(agent)
                    }
                })
            })
            .collect()
    });
    summarize(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = r#"
games = 3
base_seed = 11
parallelism = 2

[deck]
synthetic = 60

[game]
num_players = 3

[[seat]]
id = "r"
kind = "random"

[[seat]]
id = "t1"
kind = "table"

[[seat]]
id = "m"
kind = "remote"
[seat.endpoint]
base_url = "http://127.0.0.1:9"
model = "x"
"#;

    #[test]
    fn spec_parses_with_nested_endpoint() {
        let spec = TournamentSpec::from_toml(SPEC, ".").unwrap();
        assert_eq!(spec.seats.len(), 3);
        match &spec.seats[2].kind {
            SeatKind::Remote { endpoint } => {
                assert_eq!(endpoint.model, "x");
                assert_eq!(endpoint.temperature, 0.0);
                assert!(endpoint.fallback);
            }
            other => panic!("unexpected seat {other:?}"),
        }
        assert_eq!(spec.game.hand_size, 6);
    }

    #[test]
    fn spec_validation() {
        let bad = SPEC.replace("games = 3", "games = 0");
        assert!(matches!(
            TournamentSpec::from_toml(&bad, "."),
            Err(TournamentError::Invalid(_))
        ));
        let bad = SPEC.replace("num_players = 3", "num_players = 4");
        assert!(matches!(
            TournamentSpec::from_toml(&bad, "."),
            Err(TournamentError::Invalid(_))
        ));
        let bad = SPEC.replace("synthetic = 60", "synthetic = 60\npath = \"d\"");
        assert!(TournamentSpec::from_toml(&bad, ".").is_err());
        let bad = SPEC.replace("parallelism = 2", "parallelism = 2\ncolour = 1");
        assert!(TournamentSpec::from_toml(&bad, ".").is_err());
    }

    #[test]
    fn plans_are_seeded_per_game() {
        let cards = synthetic_cards(40);
        let roster: Vec<PlayerId> = ["a", "b", "c"].map(PlayerId::from).to_vec();
        let config = GameConfig {
            num_players: 3,
            ..GameConfig::default()
        };
        let a = plan_games(5, 1, &config, &cards, &roster);
        let b = plan_games(5, 1, &config, &cards, &roster);
        assert_eq!(a, b);
        assert_ne!(a[0].setup.config.shuffle_seed, a[1].setup.config.shuffle_seed);
        assert_ne!(a[0].agent_seeds[0], a[0].agent_seeds[1]);
        let starts: std::collections::HashSet<usize> =
            plan_games(30, 1, &config, &cards, &roster).iter().map(|p| p.setup.start_storyteller).collect();
        assert_eq!(starts.len(), 3);
    }

    #[test]
    fn dead_remote_fails_every_game() {
        let spec = TournamentSpec::from_toml(SPEC, ".").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let err = run_tournament(&spec, dir.path()).unwrap_err();
        assert!(matches!(
            err,
            TournamentError::Metrics(MetricsError::NoCompletedGames { failed: 3 })
        ));
    }
}
