//! Multiple-comparison control.

use std::cmp::Ordering;

use super::{Result, StatsError};

fn check_p(p_values: &[f64]) -> Result<()> {
    if let Some(bad) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(StatsError::Invalid(format!("p-value {bad} outside [0, 1]")));
    }
    Ok(())
}

/// Benjamini–Hochberg step-up. Returns the rejected indices in ascending
/// index order.
pub fn bh_fdr(p_values: &[f64], q: f64) -> Result<Vec<usize>> {
    check_p(p_values)?;
    let m = p_values.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].partial_cmp(&p_values[b]).unwrap_or(Ordering::Equal));
    let cutoff =
        (1..=m).rev().find(|&i| p_values[order[i - 1]] <= i as f64 / m as f64 * q).map(|i| p_values[order[i - 1]]);
    let Some(cutoff) = cutoff else {
        return Ok(Vec::new());
    };
    Ok((0..m).filter(|&i| p_values[i] <= cutoff).collect())
}

/// Step-up adjusted p-values: index i is rejected at level q exactly when
/// the returned value is ≤ q.
pub fn bh_adjust(p_values: &[f64]) -> Result<Vec<f64>> {
    check_p(p_values)?;
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].partial_cmp(&p_values[b]).unwrap_or(Ordering::Equal));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for rank in (1..=m).rev() {
        let i = order[rank - 1];
        running = running.min(p_values[i] * m as f64 / rank as f64);
        adjusted[i] = running;
    }
    Ok(adjusted)
}

/// min(1, p × corrections)
pub fn bonferroni(p: f64, corrections: usize) -> f64 {
    (p * corrections.max(1) as f64).min(1.0)
}
