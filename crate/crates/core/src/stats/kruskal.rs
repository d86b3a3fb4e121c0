use super::dist::chi2_sf;
use super::ranks::{midranks, tie_term};
use super::{check_finite, Result, StatsError, TestResult};

/// Kruskal–Wallis H with mid-rank tie correction, referred to χ²(k-1).
/// The effect size is ε² = (H - k + 1) / (N - k).
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<TestResult> {
    if groups.len() < 2 {
        return Err(StatsError::Invalid("Kruskal-Wallis needs at least two groups".into()));
    }
    for g in groups {
        check_finite(g, "Kruskal-Wallis group")?;
    }
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    let (ranks, ties) = midranks(&pooled);

    let mut offset = 0;
    let mut sum_sq = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        sum_sq += r * r / g.len() as f64;
        offset += g.len();
    }
    let mut h = 12.0 / (n * (n + 1.0)) * sum_sq - 3.0 * (n + 1.0);
    let correction = 1.0 - tie_term(&ties) / (n.powi(3) - n);
    let df = groups.len() as u32 - 1;
    if correction <= 0.0 {
        // every observation tied
        return Ok(TestResult::new(0.0, Some(df), 1.0).with_effect("epsilon_squared", None));
    }
    h /= correction;
    let epsilon_sq = epsilon_squared(h, groups.len(), pooled.len());
    Ok(TestResult::new(h, Some(df), chi2_sf(h, df as f64)).with_effect("epsilon_squared", epsilon_sq))
}

/// ε² = (H − k + 1) / (N − k); undefined when N = k.
pub fn epsilon_squared(h: f64, k: usize, n: usize) -> Option<f64> {
    (n > k).then(|| (h - k as f64 + 1.0) / (n - k) as f64)
}
