//! Declarative run configuration.
//!
//! ```toml
//! run_id = "audit-01"
//! seed = 7
//! providers = "providers.toml"   # relative to this file
//! scenarios = "scenarios.toml"   # optional, defaults to the built-in suite
//! models = ["gpt-5-mini"]        # optional subset of the registry
//!
//! [policy]
//! n_samples = 30
//! temperature = 0.7              # or "provider_default"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Ablation, RunError, RunPlan};
use crate::providers::{load_registry, SamplingPolicy};
use crate::scenario::{default_suite, load_scenario_suite};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub run_id: String,
    #[serde(default)]
    pub seed: u64,
    pub providers: PathBuf,
    #[serde(default)]
    pub scenarios: Option<PathBuf>,
    #[serde(default)]
    pub models: Option<Vec<String>>,
    #[serde(default)]
    pub policy: SamplingPolicy,
}

fn read(path: &Path) -> Result<String, RunError> {
    std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))
}

impl PlanConfig {
    pub fn parse(source: &str) -> Result<Self, RunError> {
        toml::from_str(source).map_err(|e| RunError::Config(format!("plan file: {e}")))
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf), RunError> {
        let cfg = Self::parse(&read(path)?)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    /// Resolves file references relative to `base` into a full plan.
    pub fn resolve(&self, base: &Path) -> Result<RunPlan, RunError> {
        let registry_path = base.join(&self.providers);
        let mut models = load_registry(&read(&registry_path)?)
            .map_err(|e| RunError::Config(format!("{}: {e}", registry_path.display())))?;
        if let Some(wanted) = &self.models {
            for id in wanted {
                if !models.iter().any(|m| &m.model_id == id) {
                    return Err(RunError::Config(format!("model `{id}` is not in {}", registry_path.display())));
                }
            }
            models.retain(|m| wanted.contains(&m.model_id));
        }
        let scenarios = match &self.scenarios {
            Some(p) => load_scenario_suite(&read(&base.join(p))?)?,
            None => default_suite(),
        };
        let plan = RunPlan {
            run_id: self.run_id.clone(),
            models,
            scenarios,
            policy: self.policy.clone(),
            ablation: Ablation::None,
            seed: self.seed,
        };
        plan.validate()?;
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolves_relative_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("providers.toml"),
            r#"
[[model]]
model_id = "a"
origin = "OSS"
tier = "TINY"
endpoint = "builtin-mock"
[model.mock]
svi_target = 0.5

[[model]]
model_id = "b"
origin = "CN_commercial"
tier = "LARGE"
endpoint = "builtin-mock"
[model.mock]
lpn_rates = [0.3, 0.3, 0.3, 0.3]
"#,
        )
        .unwrap();
        let plan_src = r#"
run_id = "p1"
seed = 4
providers = "providers.toml"
models = ["b"]
[policy]
n_samples = 5
temperature = "provider_default"
"#;
        std::fs::write(dir.path().join("plan.toml"), plan_src).unwrap();
        let (cfg, base) = PlanConfig::load(&dir.path().join("plan.toml")).unwrap();
        let plan = cfg.resolve(&base).unwrap();
        assert_eq!(plan.models.len(), 1);
        assert_eq!(plan.models[0].model_id, "b");
        assert_eq!(plan.policy.n_samples, 5);
        assert_eq!(plan.policy.temperature, None);
        assert_eq!(plan.scenarios.len(), 14);

        let bad = plan_src.replace("[\"b\"]", "[\"zzz\"]");
        assert!(PlanConfig::parse(&bad).unwrap().resolve(&base).is_err());
    }
}
