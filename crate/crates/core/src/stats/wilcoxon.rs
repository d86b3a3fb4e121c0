use super::dist::normal_sf;
use super::ranks::{midranks, tie_term};
use super::{Result, StatsError, TestResult};

/// Nonzero-pair count at or below which the exact null distribution is used.
pub const EXACT_MAX_PAIRS: usize = 20;

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped; |d| gets mid-ranks. The reported statistic is
/// min(W+, W-).
pub fn wilcoxon_signed_rank(paired_a: &[f64], paired_b: &[f64]) -> Result<TestResult> {
    if paired_a.len() != paired_b.len() {
        return Err(StatsError::LengthMismatch(paired_a.len(), paired_b.len()));
    }
    if paired_a.is_empty() {
        return Err(StatsError::Empty("Wilcoxon pairs"));
    }
    let diffs: Vec<f64> = paired_a.iter().zip(paired_b).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(StatsError::Invalid("non-finite paired difference".into()));
    }
    if diffs.is_empty() {
        let mut r = TestResult::new(0.0, None, 1.0);
        r.exact = true;
        return Ok(r);
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = midranks(&abs);
    let w_plus: f64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let total: f64 = ranks.iter().sum();
    let w_minus = total - w_plus;
    let exact = diffs.len() <= EXACT_MAX_PAIRS;
    let p = if exact {
        exact_p(&ranks, w_plus)
    } else {
        let n = diffs.len() as f64;
        let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term(&ties) / 48.0;
        if var <= 0.0 {
            1.0
        } else {
            let z = (w_plus - total / 2.0).abs() / var.sqrt();
            (2.0 * normal_sf(z)).min(1.0)
        }
    };
    let mut r = TestResult::new(w_plus.min(w_minus), None, p);
    r.exact = exact;
    Ok(r)
}

/// P(|W+ − E| ≥ |w − E|) over all 2^n sign assignments, by dynamic
/// programming on doubled ranks.
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0f64; total + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let center = total as f64 / 2.0;
    let observed = (w_plus * 2.0 - center).abs();
    let all: f64 = counts.iter().sum();
    let tail: f64 =
        counts.iter().enumerate().filter(|(s, _)| (*s as f64 - center).abs() >= observed - 1e-9).map(|(_, c)| c).sum();
    (tail / all).min(1.0)
}
