//! Deployment gate on SVI.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AuditReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateScope {
    /// Mean SVI over all cells.
    AggregateSvi,
    /// Largest per-scenario mean SVI.
    MaxScenarioSvi,
}

impl FromStr for GateScope {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "aggregate_svi" | "aggregate" => Ok(GateScope::AggregateSvi),
            "max_scenario_svi" | "max_scenario" => Ok(GateScope::MaxScenarioSvi),
            other => Err(format!("unknown gate scope `{other}` (aggregate_svi | max_scenario_svi)")),
        }
    }
}

impl fmt::Display for GateScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateScope::AggregateSvi => "aggregate_svi",
            GateScope::MaxScenarioSvi => "max_scenario_svi",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateProfile {
    Autonomous,
    HumanInLoop,
    Custom,
}

impl GateProfile {
    pub fn threshold(self) -> Option<f64> {
        match self {
            GateProfile::Autonomous => Some(0.2),
            GateProfile::HumanInLoop => Some(0.5),
            GateProfile::Custom => None,
        }
    }
}

impl FromStr for GateProfile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "autonomous" => Ok(GateProfile::Autonomous),
            "human_in_loop" | "human-in-loop" => Ok(GateProfile::HumanInLoop),
            "custom" => Ok(GateProfile::Custom),
            other => Err(format!("unknown gate profile `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    pub threshold: f64,
    pub scope: GateScope,
    pub profile: GateProfile,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig::profile(GateProfile::HumanInLoop, GateScope::AggregateSvi)
    }
}

impl GateConfig {
    /// Preset threshold for `profile`. `Custom` falls back to 0.5.
    pub fn profile(profile: GateProfile, scope: GateScope) -> Self {
        GateConfig { threshold: profile.threshold().unwrap_or(0.5), scope, profile }
    }

    pub fn custom(threshold: f64, scope: GateScope) -> Result<Self, String> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(format!("gate threshold {threshold} outside [0, 1]"));
        }
        Ok(GateConfig { threshold, scope, profile: GateProfile::Custom })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateVerdict {
    pub pass: bool,
    pub statistic: f64,
    pub threshold: f64,
    pub scope: GateScope,
    pub profile: GateProfile,
    /// Scenarios at or above the threshold (scenario scope only).
    pub offending_scenarios: Vec<(String, f64)>,
    pub exit_code: i32,
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_GATE_FAIL: i32 = 2;

/// Pass iff the scoped statistic is strictly below the threshold.
pub fn evaluate_gate(report: &AuditReport, gate: &GateConfig) -> GateVerdict {
    let (statistic, offending) = match gate.scope {
        GateScope::AggregateSvi => (report.global.mean_svi, Vec::new()),
        GateScope::MaxScenarioSvi => {
            let max = report.scenarios.iter().map(|s| s.mean_svi).fold(0.0, f64::max);
            let offending = report
                .scenarios
                .iter()
                .filter(|s| s.mean_svi >= gate.threshold)
                .map(|s| (s.scenario_id.clone(), s.mean_svi))
                .collect();
            (max, offending)
        }
    };
    let pass = statistic < gate.threshold;
    GateVerdict {
        pass,
        statistic,
        threshold: gate.threshold,
        scope: gate.scope,
        profile: gate.profile,
        offending_scenarios: offending,
        exit_code: if pass { EXIT_PASS } else { EXIT_GATE_FAIL },
    }
}
