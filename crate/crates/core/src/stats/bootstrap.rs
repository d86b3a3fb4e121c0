//! Seeded percentile bootstrap.
//!
//! Resample `b` draws from its own ChaCha8 stream (`seed`, stream `b`), so
//! the result does not depend on evaluation order or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{check_finite, IntervalEstimate, IntervalMethod, Result, StatsError};

pub const DEFAULT_RESAMPLES: usize = 5000;
pub const MIN_RESAMPLES: usize = 1000;

pub fn mean(data: &[f64]) -> f64 {
    data.iter().sum::<f64>() / data.len() as f64
}

/// Linear-interpolation quantile of sorted data (the common "type 7").
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Stream for resample `b`.
pub fn resample_rng(seed: u64, b: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b as u64);
    rng
}

/// Percentile interval of `statistic` over `resamples` seeded resamples.
///
/// For statistics whose bootstrap distribution can sit entirely on one side
/// of the point estimate (medians of tiny samples, say) the interval is
/// widened to include the point.
pub fn bootstrap_ci<F>(data: &[f64], statistic: F, resamples: usize, level: f64, seed: u64) -> Result<IntervalEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_finite(data, "bootstrap data")?;
    if resamples < MIN_RESAMPLES {
        return Err(StatsError::Invalid(format!(
            "bootstrap needs at least {MIN_RESAMPLES} resamples, got {resamples}"
        )));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(StatsError::Invalid(format!("confidence level {level} outside (0, 1)")));
    }
    let n = data.len();
    let mut stats: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |buf, b| {
                let mut rng = resample_rng(seed, b);
                for slot in buf.iter_mut() {
                    *slot = data[rng.random_range(0..n)];
                }
                statistic(buf)
            },
        )
        .collect();
    stats.sort_by(|a, b| a.total_cmp(b));
    let alpha = (1.0 - level) / 2.0;
    let point = statistic(data);
    let lo = quantile_sorted(&stats, alpha).min(point);
    let hi = quantile_sorted(&stats, 1.0 - alpha).max(point);
    Ok(IntervalEstimate { point, lo, hi, level, method: IntervalMethod::BootstrapPercentile })
}
