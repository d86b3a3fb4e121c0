//! Mid-rank assignment shared by the rank-based tests.

use std::cmp::Ordering;

/// 1-based ranks with ties given the average of the positions they span.
/// Also returns the tie-group sizes (only groups larger than one).
pub fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share rank mean of (i+1)..=j
        let rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = rank;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

/// Σ (t³ - t) over tie groups.
pub fn tie_term(ties: &[usize]) -> f64 {
    ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_with_ties() {
        let (r, t) = midranks(&[10.0, 20.0, 20.0, 5.0, 20.0]);
        assert_eq!(r, vec![2.0, 4.0, 4.0, 1.0, 4.0]);
        assert_eq!(t, vec![3]);
        assert_eq!(tie_term(&t), 24.0);
    }
}
