//! Fractional ("average") ranking shared by game positions and leaderboards.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// Largest value ranks first.
    Descending,
    /// Smallest value ranks first.
    Ascending,
}

/// 1-based ranks in input order; tied values share the mean of the positions they span.
pub fn fractional_ranks(values: &[f64], order: Order) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        let cmp = values[a].total_cmp(&values[b]);
        match order {
            Order::Ascending => cmp,
            Order::Descending => cmp.reverse(),
        }
    });

    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let mean = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = mean;
        }
        start = end;
    }
    ranks
}
