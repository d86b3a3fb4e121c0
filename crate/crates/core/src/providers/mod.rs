//! Sampling decisions from model endpoints.
//!
//! Every sample is a single stateless user turn: no system message, no
//! history, no tools. Real endpoints speak an HTTP JSON chat-completion
//! shape ([`http`]); the built-in mock ([`mock`]) produces seeded synthetic
//! responses for pipeline validation.

pub mod http;
pub mod mock;

use std::collections::BTreeMap;
use std::fmt;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::PromptInstance;

pub use http::{HttpProvider, RequestShape};
pub use mock::{build_negation_fragile_mock, mock_generate, DrawCoupling, MockCell, MockModelConfig, MockProvider};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    /// Retryable: network failure, timeout, 429 or 5xx.
    #[error("transport error: {0}")]
    Transport(String),
    /// Aborts the run: bad credentials, unknown model, rejected request.
    #[error("fatal provider error: {0}")]
    Fatal(String),
    #[error("provider configuration error: {0}")]
    Config(String),
}

impl ProviderError {
    pub fn is_run_fatal(&self) -> bool {
        !matches!(self, ProviderError::Transport(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Origin {
    #[serde(rename = "US_commercial", alias = "US")]
    UsCommercial,
    #[serde(rename = "CN_commercial", alias = "CN")]
    CnCommercial,
    #[serde(rename = "OSS")]
    Oss,
}

impl Origin {
    pub const ALL: [Origin; 3] = [Origin::UsCommercial, Origin::CnCommercial, Origin::Oss];

    pub fn short(self) -> &'static str {
        match self {
            Origin::UsCommercial => "US",
            Origin::CnCommercial => "CN",
            Origin::Oss => "OSS",
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Tier {
    Tiny,
    Small,
    Medium,
    Large,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReasoningMode {
    #[default]
    None,
    Enabled,
    ProviderDefault,
}

/// Registry settings for the built-in mock endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockSettings {
    /// Build a negation-fragile profile with this SVI.
    #[serde(default)]
    pub svi_target: Option<f64>,
    /// Explicit LPN endorsement rates for F0..F3 (overrides `svi_target`).
    #[serde(default)]
    pub lpn_rates: Option<[f64; 4]>,
    #[serde(default = "default_mock_compliance")]
    pub compliance: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub coupling: DrawCoupling,
}

fn default_mock_compliance() -> f64 {
    1.0
}

impl MockSettings {
    pub fn to_config(&self) -> Result<MockModelConfig, ProviderError> {
        let mut cfg = match (self.lpn_rates, self.svi_target) {
            (Some(rates), _) => MockModelConfig::from_lpn_rates(rates, self.compliance, self.seed)?,
            (None, Some(t)) => {
                let mut c = build_negation_fragile_mock(t, self.seed)?;
                c.set_compliance(self.compliance)?;
                c
            }
            (None, None) => return Err(ProviderError::Config("mock settings need `svi_target` or `lpn_rates`".into())),
        };
        cfg.coupling = self.coupling;
        Ok(cfg)
    }
}

/// Serializes `Option<f64>` temperatures with `None` as `"provider_default"`.
pub mod temperature_field {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    const DEFAULT_TAG: &str = "provider_default";

    pub fn serialize<S: Serializer>(t: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match t {
            Some(v) => v.serialize(s),
            None => s.serialize_str(DEFAULT_TAG),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Tag(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Some(v)),
            Raw::Tag(t) if t == DEFAULT_TAG => Ok(None),
            Raw::Tag(t) => Err(serde::de::Error::custom(format!("unknown temperature tag {t:?}"))),
        }
    }
}

pub const MOCK_ENDPOINT: &str = "builtin-mock";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model_id: String,
    pub origin: Origin,
    pub tier: Tier,
    /// URL of a chat-completion endpoint, or `builtin-mock`.
    pub endpoint: String,
    #[serde(default = "yes")]
    pub supports_temperature: bool,
    #[serde(default)]
    pub reasoning_mode: ReasoningMode,
    #[serde(default)]
    pub family: Option<String>,
    /// Name of the environment variable holding the API key.
    #[serde(default)]
    pub auth_env: Option<String>,
    /// Model name sent on the wire, if it differs from `model_id`.
    #[serde(default)]
    pub api_model: Option<String>,
    #[serde(default)]
    pub request: RequestShape,
    #[serde(default)]
    pub mock: Option<MockSettings>,
}

fn yes() -> bool {
    true
}

impl ModelSpec {
    pub fn is_mock(&self) -> bool {
        self.endpoint == MOCK_ENDPOINT || self.endpoint == "mock"
    }

    pub fn mock(model_id: &str, origin: Origin, settings: MockSettings) -> Self {
        ModelSpec {
            model_id: model_id.to_string(),
            origin,
            tier: Tier::Tiny,
            endpoint: MOCK_ENDPOINT.to_string(),
            supports_temperature: true,
            reasoning_mode: ReasoningMode::None,
            family: None,
            auth_env: None,
            api_model: None,
            request: RequestShape::default(),
            mock: Some(settings),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPolicy {
    #[serde(default = "default_samples")]
    pub n_samples: u32,
    /// `None` means provider default.
    #[serde(default = "default_temperature", with = "temperature_field")]
    pub temperature: Option<f64>,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_concurrency")]
    pub concurrency_limit: usize,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    /// Token-bucket refill rate per endpoint.
    #[serde(default = "default_rps")]
    pub requests_per_second: f64,
    /// First backoff delay; doubles on each retry.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
}

fn default_samples() -> u32 {
    30
}
fn default_temperature() -> Option<f64> {
    Some(0.7)
}
fn default_retries() -> u32 {
    4
}
fn default_timeout() -> u64 {
    120
}
fn default_concurrency() -> usize {
    4
}
fn default_max_tokens() -> u32 {
    2048
}
fn default_rps() -> f64 {
    2.0
}
fn default_backoff() -> u64 {
    500
}

impl Default for SamplingPolicy {
    fn default() -> Self {
        SamplingPolicy {
            n_samples: default_samples(),
            temperature: default_temperature(),
            max_retries: default_retries(),
            timeout_secs: default_timeout(),
            concurrency_limit: default_concurrency(),
            max_tokens: default_max_tokens(),
            requests_per_second: default_rps(),
            backoff_ms: default_backoff(),
        }
    }
}

impl SamplingPolicy {
    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.n_samples == 0 {
            return Err(ProviderError::Config("n_samples must be at least 1".into()));
        }
        if let Some(t) = self.temperature {
            if !(0.0..=2.0).contains(&t) {
                return Err(ProviderError::Config(format!("temperature {t} outside [0, 2]")));
            }
        }
        if self.concurrency_limit == 0 {
            return Err(ProviderError::Config("concurrency_limit must be at least 1".into()));
        }
        Ok(())
    }

    /// Temperature actually sent to `spec`, `None` for provider default.
    pub fn temperature_for(&self, spec: &ModelSpec) -> Option<f64> {
        if spec.supports_temperature {
            self.temperature
        } else {
            None
        }
    }
}

/// A source of raw completions for one model.
pub trait Provider: Send + Sync {
    fn complete(
        &self,
        prompt: &PromptInstance,
        temperature: Option<f64>,
        draw_index: u32,
    ) -> Result<String, ProviderError>;
}

/// One stateless completion with retry on transport errors (exponential
/// backoff). Content problems are data, not errors, and are never retried.
pub fn sample_decision(
    spec: &ModelSpec,
    provider: &dyn Provider,
    prompt: &PromptInstance,
    policy: &SamplingPolicy,
    draw_index: u32,
) -> Result<String, ProviderError> {
    let temperature = policy.temperature_for(spec);
    let mut delay = Duration::from_millis(policy.backoff_ms);
    let mut attempt = 0;
    loop {
        match provider.complete(prompt, temperature, draw_index) {
            Ok(body) => return Ok(body),
            Err(ProviderError::Transport(msg)) if attempt < policy.max_retries => {
                attempt += 1;
                log::warn!(
                    "{}: transport error on draw {draw_index} (attempt {attempt}/{}): {msg}",
                    spec.model_id,
                    policy.max_retries
                );
                thread::sleep(delay);
                delay = delay.saturating_mul(2);
            }
            Err(e) => return Err(e),
        }
    }
}

/// Builds the provider behind a registry entry.
pub fn connect(spec: &ModelSpec, policy: &SamplingPolicy) -> Result<Box<dyn Provider>, ProviderError> {
    if spec.is_mock() {
        let settings = spec.mock.as_ref().ok_or_else(|| {
            ProviderError::Config(format!("{}: mock endpoint without [mock] settings", spec.model_id))
        })?;
        return Ok(Box::new(MockProvider::new(settings.to_config()?)));
    }
    Ok(Box::new(HttpProvider::new(spec, policy)?))
}

#[derive(Debug, Deserialize)]
struct RegistryFile {
    #[serde(default)]
    model: Vec<ModelSpec>,
}

/// Parses a provider registry (TOML, one `[[model]]` table per model).
pub fn load_registry(source: &str) -> Result<Vec<ModelSpec>, ProviderError> {
    let file: RegistryFile = toml::from_str(source).map_err(|e| ProviderError::Config(e.to_string()))?;
    let mut seen = BTreeMap::new();
    for (i, spec) in file.model.iter().enumerate() {
        if let Some(prev) = seen.insert(spec.model_id.clone(), i) {
            return Err(ProviderError::Config(format!(
                "duplicate model_id `{}` (entries {} and {})",
                spec.model_id,
                prev + 1,
                i + 1
            )));
        }
        if spec.is_mock() && spec.mock.is_none() {
            return Err(ProviderError::Config(format!("{}: mock endpoint needs [model.mock]", spec.model_id)));
        }
    }
    Ok(file.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};

    struct Flaky {
        failures: u32,
        calls: AtomicU32,
        fatal: bool,
    }

    impl Provider for Flaky {
        fn complete(&self, _: &PromptInstance, _: Option<f64>, _: u32) -> Result<String, ProviderError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if self.fatal {
                return Err(ProviderError::Fatal("401".into()));
            }
            if n < self.failures {
                Err(ProviderError::Transport("reset".into()))
            } else {
                Ok("body".into())
            }
        }
    }

    fn prompt() -> PromptInstance {
        let s = crate::scenario::Scenario::new("s", crate::scenario::Domain::Law, "t", "They", "x", "y");
        crate::scenario::render_prompt(&s, crate::scenario::Frame::F0).unwrap()
    }

    fn fast_policy(retries: u32) -> SamplingPolicy {
        SamplingPolicy { max_retries: retries, backoff_ms: 1, ..SamplingPolicy::default() }
    }

    #[test]
    fn retries_transport_only() {
        let spec = ModelSpec::mock(
            "m",
            Origin::Oss,
            MockSettings {
                svi_target: Some(0.0),
                lpn_rates: None,
                compliance: 1.0,
                seed: 0,
                coupling: DrawCoupling::SharedDraw,
            },
        );
        let p = Flaky { failures: 2, calls: AtomicU32::new(0), fatal: false };
        assert_eq!(sample_decision(&spec, &p, &prompt(), &fast_policy(3), 0).unwrap(), "body");
        assert_eq!(p.calls.load(Ordering::SeqCst), 3);

        let p = Flaky { failures: 5, calls: AtomicU32::new(0), fatal: false };
        assert!(matches!(sample_decision(&spec, &p, &prompt(), &fast_policy(2), 0), Err(ProviderError::Transport(_))));
        assert_eq!(p.calls.load(Ordering::SeqCst), 3);

        let p = Flaky { failures: 0, calls: AtomicU32::new(0), fatal: true };
        let err = sample_decision(&spec, &p, &prompt(), &fast_policy(3), 0).unwrap_err();
        assert!(err.is_run_fatal());
        assert_eq!(p.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn temperature_only_when_supported() {
        let mut spec = ModelSpec::mock(
            "m",
            Origin::Oss,
            MockSettings {
                svi_target: Some(0.0),
                lpn_rates: None,
                compliance: 1.0,
                seed: 0,
                coupling: DrawCoupling::SharedDraw,
            },
        );
        let policy = SamplingPolicy::default();
        assert_eq!(policy.temperature_for(&spec), Some(0.7));
        spec.supports_temperature = false;
        assert_eq!(policy.temperature_for(&spec), None);
    }

    #[test]
    fn policy_validation() {
        assert!(SamplingPolicy::default().validate().is_ok());
        let bad = SamplingPolicy { temperature: Some(2.5), ..SamplingPolicy::default() };
        assert!(bad.validate().is_err());
        let bad = SamplingPolicy { n_samples: 0, ..SamplingPolicy::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn registry_parsing() {
        let src = r#"
[[model]]
model_id = "gpt-5-mini"
origin = "US_commercial"
tier = "SMALL"
endpoint = "https://api.example.com/v1/chat/completions"
auth_env = "EXAMPLE_API_KEY"
supports_temperature = false
reasoning_mode = "provider_default"

[[model]]
model_id = "fragile"
origin = "OSS"
tier = "TINY"
endpoint = "builtin-mock"
family = "toy"

[model.mock]
svi_target = 0.65
seed = 3
"#;
        let specs = load_registry(src).unwrap();
        assert_eq!(specs.len(), 2);
        assert!(!specs[0].supports_temperature);
        assert_eq!(specs[0].reasoning_mode, ReasoningMode::ProviderDefault);
        assert!(specs[1].is_mock());
        assert_eq!(specs[1].mock.as_ref().unwrap().svi_target, Some(0.65));

        let dup =
            format!("{src}\n[[model]]\nmodel_id = \"fragile\"\norigin = \"OSS\"\ntier = \"TINY\"\nendpoint = \"x\"\n");
        assert!(load_registry(&dup).is_err());
    }
}
