use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::engine::RoundRecord;
use crate::ids::PlayerId;

/// Pairwise raw agreement: the share of rounds two players both voted in
/// where they picked the same card.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementMatrix {
    pub players: Vec<PlayerId>,
    /// `None` marks pairs that never voted in the same round.
    pub values: Vec<Vec<Option<f64>>>,
    pub counts: Vec<Vec<usize>>,
    pub agreements: Vec<Vec<usize>>,
}

impl AgreementMatrix {
    pub fn get(&self, a: &PlayerId, b: &PlayerId) -> Option<f64> {
        let i = self.players.iter().position(|p| p == a)?;
        let j = self.players.iter().position(|p| p == b)?;
        self.values[i][j]
    }

    pub fn undefined_pairs(&self) -> Vec<(PlayerId, PlayerId)> {
        let mut out = Vec::new();
        for i in 0..self.players.len() {
            for j in i + 1..self.players.len() {
                if self.values[i][j].is_none() {
                    out.push((self.players[i].clone(), self.players[j].clone()));
                }
            }
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.players.len();
        (0..n).all(|i| (0..n).all(|j| self.values[i][j] == self.values[j][i] && self.counts[i][j] == self.counts[j][i]))
    }

    pub fn to_table(&self) -> String {
        let width = self
            .players
            .iter()
            .map(|p| p.as_str().len())
            .max()
            .unwrap_or(0)
            .max(4);
        let mut out = format!("{:width$}", "");
        for p in &self.players {
            let _ = write!(out, "  {:>width$}", p.as_str());
        }
        out.push('\n');
        for (i, p) in self.players.iter().enumerate() {
            let _ = write!(out, "{:<width$}", p.as_str());
            for v in &self.values[i] {
                let cell = v.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
                let _ = write!(out, "  {cell:>width$}");
            }
            out.push('\n');
        }
        out
    }

    /// Long form: one row per ordered pair.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["player_a", "player_b", "agreement", "shared_rounds", "agreed"])
            .expect("in-memory csv");
        for (i, a) in self.players.iter().enumerate() {
            for (j, b) in self.players.iter().enumerate() {
                w.write_record([
                    a.to_string(),
                    b.to_string(),
                    self.values[i][j].map(|v| format!("{v:.4}")).unwrap_or_default(),
                    self.counts[i][j].to_string(),
                    self.agreements[i][j].to_string(),
                ])
                .expect("in-memory csv");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }
}

/// Agreement over `rounds` for `voters`, or for everyone who voted when `voters` is empty.
pub fn agreement_matrix<'a>(
    rounds: impl IntoIterator<Item = &'a RoundRecord>,
    voters: &[PlayerId],
) -> AgreementMatrix {
    let rounds: Vec<&RoundRecord> = rounds.into_iter().collect();
    let players: Vec<PlayerId> = if voters.is_empty() {
        let mut seen = Vec::new();
        for r in &rounds {
            for v in &r.votes {
                if !seen.contains(&v.voter_id) {
                    seen.push(v.voter_id.clone());
                }
            }
        }
        seen
    } else {
        voters.to_vec()
    };
    let n = players.len();
    let index: BTreeMap<&PlayerId, usize> = players.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut counts = vec![vec![0usize; n]; n];
    let mut agreements = vec![vec![0usize; n]; n];
    for round in &rounds {
        let cast: Vec<(usize, &crate::ids::CardId)> = round
            .votes
            .iter()
            .filter_map(|v| index.get(&v.voter_id).map(|&i| (i, &v.chosen_card_id)))
            .collect();
        for &(i, ci) in &cast {
            for &(j, cj) in &cast {
                counts[i][j] += 1;
                if ci == cj {
                    agreements[i][j] += 1;
                }
            }
        }
    }
    let values = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        Some(1.0)
                    } else if counts[i][j] == 0 {
                        None
                    } else {
                        Some(agreements[i][j] as f64 / counts[i][j] as f64)
                    }
                })
                .collect()
        })
        .collect();
    AgreementMatrix {
        players,
        values,
        counts,
        agreements,
    }
}
