use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisError;
use crate::logstore::GameLog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    Player,
    Agent,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaptionStats {
    pub group: String,
    pub captions: usize,
    pub mean_tokens: f64,
    pub median_tokens: f64,
}

/// Whitespace-delimited units; surrounding whitespace never counts.
pub fn token_count(caption: &str) -> usize {
    caption.split_whitespace().count()
}

/// Mean and median token counts of one group.
pub fn summarize(group: impl Into<String>, captions: &[&str]) -> Result<CaptionStats, AnalysisError> {
    if captions.is_empty() {
        return Err(AnalysisError::NoCaptions);
    }
    let mut counts: Vec<usize> = captions.iter().map(|c| token_count(c)).collect();
    counts.sort_unstable();
    let n = counts.len();
    let mean = counts.iter().sum::<usize>() as f64 / n as f64;
    let median = if n % 2 == 1 {
        counts[n / 2] as f64
    } else {
        (counts[n / 2 - 1] + counts[n / 2]) as f64 / 2.0
    };
    Ok(CaptionStats {
        group: group.into(),
        captions: n,
        mean_tokens: mean,
        median_tokens: median,
    })
}

/// Storyteller captions across `logs`, grouped by player id, agent
/// description or not at all. Groups come out sorted by name.
pub fn caption_stats(logs: &[GameLog], grouping: Grouping) -> Result<Vec<CaptionStats>, AnalysisError> {
    if logs.is_empty() {
        return Err(AnalysisError::NoLogs);
    }
    let mut groups: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for log in logs {
        for round in &log.rounds {
            let key = match grouping {
                Grouping::Player => round.storyteller_id.to_string(),
                Grouping::Agent => log
                    .header
                    .seats
                    .iter()
                    .find(|s| s.player_id == round.storyteller_id)
                    .map(|s| s.agent.clone())
                    .unwrap_or_default(),
                Grouping::All => "all".to_owned(),
            };
            groups.entry(key).or_default().push(&round.caption);
        }
    }
    if groups.is_empty() {
        return Err(AnalysisError::NoCaptions);
    }
    groups
        .into_iter()
        .map(|(group, captions)| summarize(group, &captions))
        .collect()
}

pub fn caption_stats_csv(stats: &[CaptionStats]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["group", "captions", "mean_tokens", "median_tokens"])
        .expect("in-memory csv");
    for s in stats {
        w.write_record([
            s.group.clone(),
            s.captions.to_string(),
            format!("{:.4}", s.mean_tokens),
            format!("{}", s.median_tokens),
        ])
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

pub fn caption_stats_table(stats: &[CaptionStats]) -> String {
    let width = stats.iter().map(|s| s.group.len()).chain([5]).max().unwrap_or(5);
    let mut out = format!(
        "{:<width$}  {:>8}  {:>11}  {:>13}\n",
        "group", "captions", "mean_tokens", "median_tokens"
    );
    for s in stats {
        out.push_str(&format!(
            "{:<width$}  {:>8}  {:>11.2}  {:>13}\n",
            s.group, s.captions, s.mean_tokens, s.median_tokens
        ));
    }
    out
}
