use thiserror::Error;

use crate::ranks::{fractional_ranks, Order};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorrelationError {
    #[error("rank vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two observations, got {0}")]
    TooShort(usize),
    #[error("a constant ranking has no correlation")]
    ZeroVariance,
}

fn check(a: &[f64], b: &[f64]) -> Result<(), CorrelationError> {
    if a.len() != b.len() {
        return Err(CorrelationError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(CorrelationError::TooShort(a.len()));
    }
    Ok(())
}

fn has_ties(ranks: &[f64]) -> bool {
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.windows(2).any(|w| w[0] == w[1])
}

/// Spearman's rho with tie correction.
///
/// Inputs are re-ranked (ascending, ties averaged), so either ranks or raw
/// scores may be passed. Without ties this is `1 - 6 * sum(d^2) / (n (n^2 - 1))`;
/// with ties it is the Pearson correlation of the averaged ranks.
pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<f64, CorrelationError> {
    check(a, b)?;
    let ra = fractional_ranks(a, Order::Ascending);
    let rb = fractional_ranks(b, Order::Ascending);
    let n = a.len() as f64;
    if !has_ties(&ra) && !has_ties(&rb) {
        let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y) * (x - y)).sum();
        return Ok(1.0 - 6.0 * d2 / (n * (n * n - 1.0)));
    }
    let mean = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        let (dx, dy) = (x - mean, y - mean);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(CorrelationError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Kendall's tau-b.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64, CorrelationError> {
    check(a, b)?;
    let (mut concordant, mut discordant, mut ties_a, mut ties_b) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let da = a[i].total_cmp(&a[j]) as i64;
            let db = b[i].total_cmp(&b[j]) as i64;
            match (da, db) {
                (0, 0) => {}
                (0, _) => ties_a += 1,
                (_, 0) => ties_b += 1,
                _ if da == db => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let n1 = (concordant + discordant + ties_a) as f64;
    let n2 = (concordant + discordant + ties_b) as f64;
    if n1 == 0.0 || n2 == 0.0 {
        return Err(CorrelationError::ZeroVariance);
    }
    Ok((concordant - discordant) as f64 / (n1 * n2).sqrt())
}
