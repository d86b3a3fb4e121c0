//! Crossed-design execution from plan to aggregated cells, with a resumable run log.

pub mod aggregate;
pub mod exec;
pub mod log_file;
pub mod plan_file;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ingest::ParseOutcome;
use crate::lpn::ActionEndorsement;
use crate::providers::{ModelSpec, ProviderError, SamplingPolicy};
use crate::scenario::{render_prompt, Frame, Scenario, ScenarioError};

pub use aggregate::{aggregate, Aggregation, CellTest};
pub use exec::{
    connect_plan, execute, execute_remainder, resume, run_in_memory, ModelTally, ProviderMap, Resumption, RunSummary,
};
pub use log_file::{read_log, LogContents, RunLog};
pub use plan_file::PlanConfig;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("run-fatal error from {model}: {source}")]
    Fatal { model: String, source: ProviderError },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("plan digest mismatch for run {run_id}: log has {stored}, plan is {current}")]
    DigestMismatch { run_id: String, stored: String, current: String },
    #[error("run {0} already has records; resume it instead")]
    AlreadyStarted(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl RunError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        RunError::Io { path: path.display().to_string(), source }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    #[default]
    None,
    TemperatureZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub run_id: String,
    pub models: Vec<ModelSpec>,
    pub scenarios: Vec<Scenario>,
    pub policy: SamplingPolicy,
    #[serde(default)]
    pub ablation: Ablation,
    pub seed: u64,
}

impl RunPlan {
    pub fn validate(&self) -> Result<(), RunError> {
        if self.run_id.is_empty() || self.run_id.contains(['/', '\\']) {
            return Err(RunError::Config(format!("run_id `{}` is not a valid file stem", self.run_id)));
        }
        self.policy.validate().map_err(|e| RunError::Config(e.to_string()))?;
        let mut ids = BTreeSet::new();
        for m in &self.models {
            if !ids.insert(&m.model_id) {
                return Err(RunError::Config(format!("model_id `{}` appears twice", m.model_id)));
            }
        }
        let mut sids = BTreeSet::new();
        for s in &self.scenarios {
            if !sids.insert(&s.id) {
                return Err(RunError::Config(format!("scenario `{}` appears twice", s.id)));
            }
            s.validate()?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the plan.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("plan serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// All (model, scenario, frame, draw) tuples, ordered round-robin over
    /// models so consecutive tasks hit different endpoints.
    pub fn tasks(&self) -> Vec<Task> {
        let mut out = Vec::with_capacity(plan_cardinality(self));
        for scenario in 0..self.scenarios.len() {
            for frame in Frame::ALL {
                for draw in 0..self.policy.n_samples {
                    for model in 0..self.models.len() {
                        out.push(Task { model, scenario, frame, draw });
                    }
                }
            }
        }
        out
    }

    pub fn key(&self, task: &Task) -> CellKey {
        CellKey {
            model_id: self.models[task.model].model_id.clone(),
            scenario_id: self.scenarios[task.scenario].id.clone(),
            frame: task.frame,
            draw_index: task.draw,
        }
    }
}

pub fn cardinality(models: usize, scenarios: usize, frames: usize, samples: usize) -> usize {
    models * scenarios * frames * samples
}

pub fn plan_cardinality(plan: &RunPlan) -> usize {
    cardinality(plan.models.len(), plan.scenarios.len(), Frame::ALL.len(), plan.policy.n_samples as usize)
}

/// Indices into a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Task {
    pub model: usize,
    pub scenario: usize,
    pub frame: Frame,
    pub draw: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub model_id: String,
    pub scenario_id: String,
    pub frame: Frame,
    pub draw_index: u32,
}

pub fn prompt_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// One line of the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub model_id: String,
    pub scenario_id: String,
    pub frame: Frame,
    pub draw_index: u32,
    pub timestamp: String,
    /// A number, or `"provider_default"` when no temperature was sent.
    #[serde(with = "crate::providers::temperature_field")]
    pub temperature_used: Option<f64>,
    pub prompt_hash: String,
    pub raw_response: String,
    pub parse: ParseOutcome,
    pub lpn_action: Option<ActionEndorsement>,
}

impl RunRecord {
    pub fn key(&self) -> CellKey {
        CellKey {
            model_id: self.model_id.clone(),
            scenario_id: self.scenario_id.clone(),
            frame: self.frame,
            draw_index: self.draw_index,
        }
    }

    /// The record as JSON with the timestamp blanked, for determinism checks.
    pub fn payload(&self) -> String {
        let mut r = self.clone();
        r.timestamp.clear();
        serde_json::to_string(&r).expect("record serializes")
    }
}

/// Temperature T = 0 copy of `base` under a new run id. Models that do not
/// accept a temperature are dropped; their ids are returned.
pub fn temperature_ablation_plan(base: &RunPlan) -> (RunPlan, Vec<String>) {
    let (kept, dropped): (Vec<ModelSpec>, Vec<ModelSpec>) =
        base.models.iter().cloned().partition(|m| m.supports_temperature);
    let dropped: Vec<String> = dropped.into_iter().map(|m| m.model_id).collect();
    for id in &dropped {
        log::warn!("{id} does not accept a temperature; dropped from the T = 0 ablation");
    }
    if kept.is_empty() {
        log::warn!("no model in {} accepts a temperature; the ablation plan is empty", base.run_id);
    }
    let plan = RunPlan {
        run_id: format!("{}-t0", base.run_id),
        models: kept,
        scenarios: base.scenarios.clone(),
        policy: SamplingPolicy { temperature: Some(0.0), ..base.policy.clone() },
        ablation: Ablation::TemperatureZero,
        seed: base.seed,
    };
    (plan, dropped)
}

/// Records whose prompt hash does not match a fresh render of their
/// (scenario, frame) under `plan`.
pub fn prompt_mismatches<'a>(plan: &RunPlan, records: &'a [RunRecord]) -> Vec<&'a RunRecord> {
    records
        .iter()
        .filter(|r| {
            let Some(s) = plan.scenarios.iter().find(|s| s.id == r.scenario_id) else {
                return true;
            };
            match render_prompt(s, r.frame) {
                Ok(p) => prompt_hash(&p.full_text) != r.prompt_hash,
                Err(_) => true,
            }
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::providers::{DrawCoupling, MockSettings, Origin};
    use crate::scenario::default_suite;

    pub fn mock_plan(run_id: &str, models: usize, scenarios: usize, n: u32) -> RunPlan {
        let models = (0..models)
            .map(|i| {
                ModelSpec::mock(
                    &format!("mock-{i}"),
                    Origin::Oss,
                    MockSettings {
                        svi_target: Some(0.3 + 0.2 * i as f64),
                        lpn_rates: None,
                        compliance: 0.9,
                        seed: i as u64,
                        coupling: DrawCoupling::SharedDraw,
                    },
                )
            })
            .collect();
        RunPlan {
            run_id: run_id.to_string(),
            models,
            scenarios: default_suite().into_iter().take(scenarios).collect(),
            policy: SamplingPolicy { n_samples: n, ..SamplingPolicy::default() },
            ablation: Ablation::None,
            seed: 11,
        }
    }
}
