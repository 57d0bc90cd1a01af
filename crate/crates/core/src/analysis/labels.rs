//! Human annotation files.
//!
//! A label file is CSV with the header `game,round,player,label`. `game` is
//! the log's game id, `round` the round index and `player` the annotated
//! player. `label` is a rationale category (`convincing`, `implausible`,
//! `hallucination`, `no_reasoning`) or a card-selection judgment (`correct`
//! or `incorrect`). Each target may carry at most one label of each sort.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisError;
use crate::ids::PlayerId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Convincing,
    Implausible,
    Hallucination,
    NoReasoning,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Convincing,
        Category::Implausible,
        Category::Hallucination,
        Category::NoReasoning,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Convincing => "convincing",
            Category::Implausible => "implausible",
            Category::Hallucination => "hallucination",
            Category::NoReasoning => "no_reasoning",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Target {
    pub game: String,
    pub round: u32,
    pub player: PlayerId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationaleLabel {
    pub target: Target,
    pub category: Category,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub target: Target,
    pub correct: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelSet {
    pub rationales: Vec<RationaleLabel>,
    pub judgments: Vec<Judgment>,
}

#[derive(Debug, Deserialize)]
struct Row {
    game: String,
    round: u32,
    player: String,
    label: String,
}

impl LabelSet {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, AnalysisError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| AnalysisError::Labels(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, AnalysisError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut set = Self::default();
        let mut seen_rationale = BTreeSet::new();
        let mut seen_judgment = BTreeSet::new();
        for (i, row) in reader.deserialize::<Row>().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| AnalysisError::Labels(format!("row {line}: {e}")))?;
            let target = Target {
                game: row.game,
                round: row.round,
                player: PlayerId::new(row.player),
            };
            let label = row.label.to_ascii_lowercase();
            let judgment = match label.as_str() {
                "correct" | "true" => Some(true),
                "incorrect" | "false" => Some(false),
                _ => None,
            };
            if let Some(correct) = judgment {
                if !seen_judgment.insert(target.clone()) {
                    return Err(AnalysisError::Labels(format!("row {line}: second judgment for {target:?}")));
                }
                set.judgments.push(Judgment { target, correct });
                continue;
            }
            let category = Category::ALL
                .into_iter()
                .find(|c| c.as_str() == label)
                .ok_or_else(|| AnalysisError::Labels(format!("row {line}: unknown label {:?}", row.label)))?;
            if !seen_rationale.insert(target.clone()) {
                return Err(AnalysisError::Labels(format!("row {line}: second rationale label for {target:?}")));
            }
            set.rationales.push(RationaleLabel { target, category });
        }
        Ok(set)
    }
}

/// Per player, the share of their labels in each category. Categories a
/// player never received are omitted, so each map sums to 1.
pub fn label_distribution(
    labels: &[RationaleLabel],
) -> Result<BTreeMap<PlayerId, BTreeMap<Category, f64>>, AnalysisError> {
    if labels.is_empty() {
        return Err(AnalysisError::EmptyLabels);
    }
    let mut counts: BTreeMap<PlayerId, BTreeMap<Category, usize>> = BTreeMap::new();
    for l in labels {
        *counts
            .entry(l.target.player.clone())
            .or_default()
            .entry(l.category)
            .or_default() += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(player, cats)| {
            let total: usize = cats.values().sum();
            let fractions = cats
                .into_iter()
                .map(|(c, n)| (c, n as f64 / total as f64))
                .collect();
            (player, fractions)
        })
        .collect())
}

/// Per player, correct / judged.
pub fn selection_accuracy(judgments: &[Judgment]) -> Result<BTreeMap<PlayerId, f64>, AnalysisError> {
    if judgments.is_empty() {
        return Err(AnalysisError::NoJudgments);
    }
    let mut counts: BTreeMap<PlayerId, (usize, usize)> = BTreeMap::new();
    for j in judgments {
        let e = counts.entry(j.target.player.clone()).or_default();
        e.1 += 1;
        if j.correct {
            e.0 += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|(p, (correct, judged))| (p, correct as f64 / judged as f64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn target(player: &str, round: u32) -> Target {
        Target {
            game: "g".into(),
            round,
            player: player.into(),
        }
    }

    #[test]
    fn distribution_fractions() {
        let all: Vec<RationaleLabel> = (0..4)
            .map(|r| RationaleLabel {
                target: target("a", r),
                category: Category::Convincing,
            })
            .collect();
        let d = label_distribution(&all).unwrap();
        assert_eq!(d[&PlayerId::from("a")], BTreeMap::from([(Category::Convincing, 1.0)]));

        let mixed: Vec<RationaleLabel> = [Category::Convincing, Category::Convincing, Category::Hallucination, Category::Hallucination]
            .into_iter()
            .enumerate()
            .map(|(r, category)| RationaleLabel {
                target: target("a", r as u32),
                category,
            })
            .collect();
        let d = label_distribution(&mixed).unwrap();
        assert_eq!(d[&PlayerId::from("a")][&Category::Hallucination], 0.5);
        assert!(matches!(label_distribution(&[]), Err(AnalysisError::EmptyLabels)));
    }

    #[test]
    fn accuracy() {
        let judgments: Vec<Judgment> = (0..10)
            .map(|r| Judgment {
                target: target("a", r),
                correct: r < 8,
            })
            .collect();
        assert_eq!(selection_accuracy(&judgments).unwrap()[&PlayerId::from("a")], 0.8);
        assert!(matches!(selection_accuracy(&[]), Err(AnalysisError::NoJudgments)));
    }

    #[test]
    fn parse_label_file() {
        let text = "game,round,player,label\n# comment\ng,0,a,Convincing\ng,0,a,correct\ng,1,b,no_reasoning\ng,1,b,false\n";
        let set = LabelSet::parse(text).unwrap();
        assert_eq!(set.rationales.len(), 2);
        assert_eq!(set.judgments.len(), 2);
        assert_eq!(set.rationales[1].category, Category::NoReasoning);
        assert!(!set.judgments[1].correct);

        let dup = "game,round,player,label\ng,0,a,convincing\ng,0,a,implausible\n";
        assert!(LabelSet::parse(dup).is_err());
        let unknown = "game,round,player,label\ng,0,a,great\n";
        assert!(LabelSet::parse(unknown).is_err());
    }
}
