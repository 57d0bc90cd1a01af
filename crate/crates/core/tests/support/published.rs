//! Figures from the results tables of the Dixit benchmark write-up, and the
//! baseline tournament checked against their direction.

use std::sync::Arc;

use dixit_core::agents::{Agent, RandomAgent, SimilarityTable, TableAgent};
use dixit_core::deck::synthetic_cards;
use dixit_core::engine::GameConfig;
use dixit_core::ids::PlayerId;
use dixit_core::tournament::{plan_games, run_plans, GameResult, MetricsReport, PlayerMetrics};

pub struct ModelRow {
    pub name: &'static str,
    pub avg_points: f64,
    pub avg_position: f64,
    pub dixit_rank: f64,
    /// `None` where the model is not listed on that leaderboard.
    pub openvlm_rank: Option<f64>,
    pub chatarena_rank: Option<f64>,
}

/// Six-model benchmark table.
pub fn model_table() -> Vec<ModelRow> {
    let row = |name, avg_points, avg_position, dixit_rank, openvlm_rank, chatarena_rank| ModelRow {
        name,
        avg_points,
        avg_position,
        dixit_rank,
        openvlm_rank,
        chatarena_rank,
    };
    vec![
        row("GPT-4o", 29.25, 1.725, 1.0, Some(1.0), Some(1.0)),
        row("Claude-3.5", 28.55, 2.050, 2.0, Some(2.0), Some(2.0)),
        row("Qwen-2-VL", 25.25, 3.075, 3.0, Some(3.0), Some(3.0)),
        row("InternVL2", 22.70, 3.725, 4.0, Some(4.0), Some(4.0)),
        row("Molmo", 18.80, 4.525, 5.0, Some(5.0), Some(5.0)),
        row("Random", 8.85, 5.900, 6.0, None, None),
    ]
}

/// The model table as a report, so the ranking code sees it like any other.
pub fn model_report() -> MetricsReport {
    MetricsReport {
        players: model_table()
            .iter()
            .map(|r| PlayerMetrics {
                player_id: PlayerId::from(r.name),
                agent: r.name.to_owned(),
                games_played: 20,
                total_points: (r.avg_points * 20.0).round() as u64,
                avg_points: r.avg_points,
                avg_position: r.avg_position,
                fallbacks: 0,
                rank: r.dixit_rank,
            })
            .collect(),
        games: 20,
        failed_games: 0,
    }
}

/// Three games of one model against three people: final points per game.
pub fn human_games() -> Vec<GameResult> {
    let names = ["Player 1", "Player 2", "Player 3", "GPT-4o Mini"];
    let games: [[u32; 4]; 3] = [[31, 28, 24, 23], [31, 19, 23, 22], [29, 30, 14, 21]];
    games
        .iter()
        .map(|g| GameResult::from_scores(names.iter().map(|n| PlayerId::from(*n)).zip(g.iter().copied()).collect()))
        .collect()
}

/// Published per-player (average points, average rank) over those games.
pub const HUMAN_AVERAGES: [(&str, f64, f64); 4] = [
    ("Player 1", 30.33, 1.33),
    ("Player 2", 25.67, 2.33),
    ("Player 3", 20.33, 3.00),
    ("GPT-4o Mini", 22.00, 3.33),
];

pub struct Separation {
    pub games: usize,
    /// Games where the random seat finished strictly below every other seat.
    pub random_lowest: usize,
    pub failed: usize,
}

/// One random agent against three table agents sharing a similarity table.
pub fn baseline_separation(games: usize, base_seed: u64) -> Separation {
    let cards = synthetic_cards(100);
    let table = Arc::new(SimilarityTable::synthetic(&cards, base_seed));
    let roster: Vec<PlayerId> = ["random", "table-1", "table-2", "table-3"].into_iter().map(PlayerId::from).collect();
    let plans = plan_games(games, base_seed, &GameConfig::default(), &cards, &roster);
    let outcomes = run_plans(&plans, 4, None, |plan| {
        let mut agents: Vec<Box<dyn Agent>> = vec![Box::new(RandomAgent::new(plan.agent_seeds[0]))];
        for _ in 1..4 {
            agents.push(Box::new(TableAgent::new(table.clone())));
        }
        Ok(agents)
    });
    let mut random_lowest = 0;
    let mut failed = 0;
    for outcome in &outcomes {
        let Ok(log) = &outcome.result else {
            failed += 1;
            continue;
        };
        let scores = &log.footer.as_ref().expect("finished game").final_scores;
        let random = scores[&roster[0]];
        if roster[1..].iter().all(|p| scores[p] > random) {
            random_lowest += 1;
        }
    }
    Separation {
        games,
        random_lowest,
        failed,
    }
}
