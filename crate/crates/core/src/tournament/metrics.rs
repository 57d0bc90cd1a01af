use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::engine::final_ranking;
use crate::ids::PlayerId;
use crate::logstore::GameLog;
use crate::ranks::{fractional_ranks, Order};

/// Outcome of one finished game, as far as the metrics care.
#[derive(Debug, Clone, PartialEq)]
pub struct GameResult {
    /// Final scores in seat order.
    pub scores: Vec<(PlayerId, u32)>,
    pub positions: BTreeMap<PlayerId, f64>,
    pub fallbacks: BTreeMap<PlayerId, usize>,
    pub agents: BTreeMap<PlayerId, String>,
}

impl GameResult {
    /// Positions derived from the scores with averaged ties.
    pub fn from_scores(scores: Vec<(PlayerId, u32)>) -> Self {
        let positions = final_ranking(&scores).into_iter().collect();
        Self {
            scores,
            positions,
            fallbacks: BTreeMap::new(),
            agents: BTreeMap::new(),
        }
    }

    /// `None` for logs without a footer.
    pub fn from_log(log: &GameLog) -> Option<Self> {
        let footer = log.footer.as_ref()?;
        let scores = log
            .header
            .seats
            .iter()
            .map(|s| {
                let points = footer.final_scores.get(&s.player_id).copied().unwrap_or(0);
                (s.player_id.clone(), points)
            })
            .collect();
        Some(Self {
            scores,
            positions: footer
                .ranking
                .iter()
                .map(|r| (r.player_id.clone(), r.position))
                .collect(),
            fallbacks: footer.fallbacks.clone(),
            agents: log
                .header
                .seats
                .iter()
                .map(|s| (s.player_id.clone(), s.agent.clone()))
                .collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    AvgPoints,
    AvgPosition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerMetrics {
    pub player_id: PlayerId,
    pub agent: String,
    pub games_played: usize,
    pub total_points: u64,
    pub avg_points: f64,
    pub avg_position: f64,
    pub fallbacks: usize,
    /// Rank by average points, ties averaged.
    pub rank: f64,
}

impl PlayerMetrics {
    pub fn value(&self, metric: Metric) -> f64 {
        match metric {
            Metric::AvgPoints => self.avg_points,
            Metric::AvgPosition => self.avg_position,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Players in order of first appearance.
    pub players: Vec<PlayerMetrics>,
    pub games: usize,
    pub failed_games: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("no completed games ({failed} failed)")]
    NoCompletedGames { failed: usize },
}

impl MetricsReport {
    pub fn from_results(results: &[GameResult], failed_games: usize) -> Result<Self, MetricsError> {
        if results.is_empty() {
            return Err(MetricsError::NoCompletedGames {
                failed: failed_games,
            });
        }
        struct Acc {
            agent: String,
            games: usize,
            points: u64,
            positions: f64,
            fallbacks: usize,
        }
        let mut order: Vec<PlayerId> = Vec::new();
        let mut acc: BTreeMap<PlayerId, Acc> = BTreeMap::new();
        for result in results {
            for (player, points) in &result.scores {
                let entry = acc.entry(player.clone()).or_insert_with(|| {
                    order.push(player.clone());
                    Acc {
                        agent: String::new(),
                        games: 0,
                        points: 0,
                        positions: 0.0,
                        fallbacks: 0,
                    }
                });
                entry.games += 1;
                entry.points += u64::from(*points);
                entry.positions += result.positions.get(player).copied().unwrap_or(f64::NAN);
                entry.fallbacks += result.fallbacks.get(player).copied().unwrap_or(0);
                if let Some(agent) = result.agents.get(player) {
                    if entry.agent.is_empty() {
                        entry.agent = agent.clone();
                    }
                }
            }
        }
        let mut players: Vec<PlayerMetrics> = order
            .iter()
            .map(|p| {
                let a = &acc[p];
                PlayerMetrics {
                    player_id: p.clone(),
                    agent: a.agent.clone(),
                    games_played: a.games,
                    total_points: a.points,
                    avg_points: a.points as f64 / a.games as f64,
                    avg_position: a.positions / a.games as f64,
                    fallbacks: a.fallbacks,
                    rank: 0.0,
                }
            })
            .collect();
        let ranks = rank_values(
            &players.iter().map(|p| p.avg_points).collect::<Vec<_>>(),
            Metric::AvgPoints,
        );
        for (p, r) in players.iter_mut().zip(ranks) {
            p.rank = r;
        }
        Ok(Self {
            players,
            games: results.len(),
            failed_games,
        })
    }

    /// Report over the completed logs; incomplete ones count as failed.
    pub fn from_logs<'a>(logs: impl IntoIterator<Item = &'a GameLog>) -> Result<Self, MetricsError> {
        let mut results = Vec::new();
        let mut failed = 0;
        for log in logs {
            match GameResult::from_log(log) {
                Some(r) => results.push(r),
                None => failed += 1,
            }
        }
        Self::from_results(&results, failed)
    }

    pub fn player(&self, id: &PlayerId) -> Option<&PlayerMetrics> {
        self.players.iter().find(|p| &p.player_id == id)
    }

    pub fn to_table(&self) -> String {
        let mut rows = self.players.clone();
        rows.sort_by(|a, b| a.rank.total_cmp(&b.rank));
        let width = rows
            .iter()
            .map(|p| p.player_id.as_str().len())
            .chain([6])
            .max()
            .unwrap_or(6);
        let agent_width = rows.iter().map(|p| p.agent.len()).chain([5]).max().unwrap_or(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>4}  {:<width$}  {:<agent_width$}  {:>5}  {:>10}  {:>12}  {:>9}",
            "rank", "player", "agent", "games", "avg_points", "avg_position", "fallbacks"
        );
        for p in &rows {
            let _ = writeln!(
                out,
                "{:>4}  {:<width$}  {:<agent_width$}  {:>5}  {:>10.2}  {:>12.3}  {:>9}",
                format_rank(p.rank),
                p.player_id,
                p.agent,
                p.games_played,
                p.avg_points,
                p.avg_position,
                p.fallbacks
            );
        }
        let _ = writeln!(out, "games: {}  failed: {}", self.games, self.failed_games);
        out
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record([
                "rank",
                "player",
                "agent",
                "games_played",
                "total_points",
                "avg_points",
                "avg_position",
                "fallbacks",
            ])
            .expect("in-memory csv");
        let mut rows = self.players.clone();
        rows.sort_by(|a, b| a.rank.total_cmp(&b.rank));
        for p in &rows {
            writer
                .write_record([
                    format_rank(p.rank),
                    p.player_id.to_string(),
                    p.agent.clone(),
                    p.games_played.to_string(),
                    p.total_points.to_string(),
                    format!("{:.4}", p.avg_points),
                    format!("{:.4}", p.avg_position),
                    p.fallbacks.to_string(),
                ])
                .expect("in-memory csv");
        }
        String::from_utf8(writer.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }
}

fn format_rank(rank: f64) -> String {
    if rank.fract() == 0.0 {
        format!("{rank:.0}")
    } else {
        format!("{rank}")
    }
}

/// Ranks for a column of metric values: descending for points, ascending for positions.
pub fn rank_values(values: &[f64], metric: Metric) -> Vec<f64> {
    let order = match metric {
        Metric::AvgPoints => Order::Descending,
        Metric::AvgPosition => Order::Ascending,
    };
    fractional_ranks(values, order)
}

/// Players ordered best first under `metric`, each with its averaged-tie rank.
pub fn rank_by(report: &MetricsReport, metric: Metric) -> Vec<(PlayerId, f64)> {
    let values: Vec<f64> = report.players.iter().map(|p| p.value(metric)).collect();
    let ranks = rank_values(&values, metric);
    let mut ranked: Vec<(PlayerId, f64)> = report
        .players
        .iter()
        .zip(ranks)
        .map(|(p, r)| (p.player_id.clone(), r))
        .collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    ranked
}
