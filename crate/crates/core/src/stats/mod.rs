//! Statistical procedures for validating framing effects.
//!
//! Everything here is deterministic. Routines that resample take an explicit
//! seed and draw from ChaCha8 (`rand_chacha`), whose output stream is fixed
//! across platforms, so CI results are reproducible bit for bit.

pub mod bayes;
pub mod bootstrap;
pub mod cochran;
pub mod dist;
pub mod fdr;
pub mod kruskal;
pub mod mann_whitney;
pub mod power;
pub mod ranks;
pub mod wilcoxon;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bayes::{bayesian_group_compare, conjugate_update, NormalPrior, PosteriorSummary};
pub use bootstrap::{bootstrap_ci, mean};
pub use cochran::{cochran_q, BinaryBlockMatrix};
pub use fdr::{bh_adjust, bh_fdr, bonferroni};
pub use kruskal::kruskal_wallis;
pub use mann_whitney::{cliffs_delta, mann_whitney};
pub use power::{chisq_power, chisq_power_mde};
pub use wilcoxon::wilcoxon_signed_rank;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("target power {0} is unattainable")]
    UnattainablePower(f64),
}

pub type Result<T> = std::result::Result<T, StatsError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub df: Option<u32>,
    pub p_value: f64,
    /// Multiplicity-adjusted p-value, when a correction was requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_adjusted: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effect_size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effect_name: Option<String>,
    /// `true` when the p-value comes from an exact null distribution.
    #[serde(default)]
    pub exact: bool,
}

impl TestResult {
    pub(crate) fn new(statistic: f64, df: Option<u32>, p_value: f64) -> Self {
        TestResult {
            statistic,
            df,
            p_value: p_value.clamp(0.0, 1.0),
            p_adjusted: None,
            effect_size: None,
            effect_name: None,
            exact: false,
        }
    }

    pub(crate) fn with_effect(mut self, name: &str, value: Option<f64>) -> Self {
        self.effect_size = value;
        self.effect_name = value.map(|_| name.to_string());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMethod {
    BootstrapPercentile,
    Posterior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub method: IntervalMethod,
}

pub(crate) fn check_finite(data: &[f64], what: &'static str) -> Result<()> {
    if data.is_empty() {
        return Err(StatsError::Empty(what));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::Invalid(format!("{what} contains non-finite values")));
    }
    Ok(())
}

/// Unbiased sample variance.
pub fn sample_variance(data: &[f64]) -> Option<f64> {
    if data.len() < 2 {
        return None;
    }
    let m = mean(data);
    Some(data.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (data.len() - 1) as f64)
}
