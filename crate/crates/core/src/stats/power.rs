//! Power and minimum detectable effect for chi-square tests, with
//! Cohen's w and noncentrality λ = N·w².

use super::dist::{chi2_quantile, noncentral_chi2_cdf};
use super::{Result, StatsError};

pub fn chisq_power(w: f64, alpha: f64, df: u32, n_total: usize) -> f64 {
    let critical = chi2_quantile(1.0 - alpha, df as f64);
    let lambda = n_total as f64 * w * w;
    1.0 - noncentral_chi2_cdf(critical, df as f64, lambda)
}

/// Smallest w with power ≥ `target_power`, by bisection (|Δw| < 1e-4).
pub fn chisq_power_mde(alpha: f64, df: u32, n_total: usize, target_power: f64) -> Result<f64> {
    if n_total < 2 {
        return Err(StatsError::Invalid("n_total must be at least 2".into()));
    }
    if !(0.0 < alpha && alpha < 1.0) || df == 0 {
        return Err(StatsError::Invalid("alpha must lie in (0, 1) and df ≥ 1".into()));
    }
    if target_power.is_nan() || target_power >= 1.0 {
        return Err(StatsError::UnattainablePower(target_power));
    }
    if target_power <= alpha {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while chisq_power(hi, alpha, df, n_total) < target_power {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(StatsError::UnattainablePower(target_power));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if chisq_power(mid, alpha, df, n_total) >= target_power {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
