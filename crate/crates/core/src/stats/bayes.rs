//! Conjugate normal–normal comparison of group means.
//!
//! Each group's mean gets a N(μ₀, τ₀²) prior. The likelihood treats the
//! group's sample variance s² as the known observation variance, so the
//! sample mean has variance s²/n. Posteriors are independent normals and
//! P(μ_a > μ_b) follows in closed form.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dist::{normal_cdf, normal_quantile};
use super::{mean, sample_variance, IntervalEstimate, IntervalMethod, Result, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalPrior {
    pub mean: f64,
    pub sd: f64,
}

impl Default for NormalPrior {
    fn default() -> Self {
        NormalPrior { mean: 0.5, sd: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalPosterior {
    pub mean: f64,
    pub var: f64,
}

impl NormalPosterior {
    pub fn sd(&self) -> f64 {
        self.var.sqrt()
    }

    /// P(this > other) for independent normal posteriors.
    pub fn prob_greater(&self, other: &NormalPosterior) -> f64 {
        let diff = self.mean - other.mean;
        let sd = (self.var + other.var).sqrt();
        if sd == 0.0 {
            return if diff > 0.0 {
                1.0
            } else if diff < 0.0 {
                0.0
            } else {
                0.5
            };
        }
        normal_cdf(diff / sd)
    }

    pub fn interval(&self, level: f64) -> IntervalEstimate {
        let z = normal_quantile(0.5 + level / 2.0);
        IntervalEstimate {
            point: self.mean,
            lo: self.mean - z * self.sd(),
            hi: self.mean + z * self.sd(),
            level,
            method: IntervalMethod::Posterior,
        }
    }
}

/// Posterior for one group. Empty data leaves the prior unchanged; a single
/// observation has no sample variance and is rejected.
pub fn conjugate_update(prior: NormalPrior, data: &[f64]) -> Result<NormalPosterior> {
    let prior_var = prior.sd * prior.sd;
    if data.is_empty() {
        return Ok(NormalPosterior { mean: prior.mean, var: prior_var });
    }
    let s2 =
        sample_variance(data).ok_or_else(|| StatsError::Invalid("group of size 1 has no sample variance".into()))?;
    let xbar = mean(data);
    let n = data.len() as f64;
    if s2 == 0.0 {
        return Ok(NormalPosterior { mean: xbar, var: 0.0 });
    }
    let precision = 1.0 / prior_var + n / s2;
    Ok(NormalPosterior { mean: (prior.mean / prior_var + n * xbar / s2) / precision, var: 1.0 / precision })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub group: String,
    pub mu_post: f64,
    pub sd_post: f64,
    pub ci95: IntervalEstimate,
    pub prob_greater: BTreeMap<String, f64>,
}

pub fn bayesian_group_compare(
    groups: &BTreeMap<String, Vec<f64>>,
    prior: NormalPrior,
) -> Result<BTreeMap<String, PosteriorSummary>> {
    let mut posteriors = BTreeMap::new();
    for (name, data) in groups {
        if data.len() == 1 {
            return Err(StatsError::Invalid(format!("group `{name}` has a single observation")));
        }
        posteriors.insert(name.clone(), conjugate_update(prior, data)?);
    }
    Ok(posteriors
        .iter()
        .map(|(name, post)| {
            let prob_greater = posteriors
                .iter()
                .filter(|(other, _)| *other != name)
                .map(|(other, op)| (other.clone(), post.prob_greater(op)))
                .collect();
            let summary = PosteriorSummary {
                group: name.clone(),
                mu_post: post.mean,
                sd_post: post.sd(),
                ci95: post.interval(0.95),
                prob_greater,
            };
            (name.clone(), summary)
        })
        .collect())
}
