//! Seeded synthetic provider.
//!
//! Every random choice is a SHA-256 hash of (seed, scenario, frame,
//! draw_index, purpose) mapped to a uniform in [0, 1), so output bytes are a
//! pure function of those inputs and independent of call order or threads.
//!
//! The agree/disagree choice compares a latent uniform `u` with the cell's
//! LPN-space endorsement probability. Under [`DrawCoupling::SharedDraw`]
//! (the default) `u` is keyed on (seed, scenario, draw_index) only, so draw
//! `d` of every frame of a scenario shares one latent value. Marginal agree
//! rates are unaffected; what changes is that estimated frame rates move
//! together, which keeps the max-minus-min SVI estimate centred on the
//! configured spread. [`DrawCoupling::Independent`] keys `u` on the frame as
//! well and behaves like four unrelated samplers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Provider, ProviderError};
use crate::ingest::{Decision, DecisionRecord};
use crate::lpn::decision_for;
use crate::scenario::{Frame, Polarity, PromptInstance};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrawCoupling {
    #[default]
    SharedDraw,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MockCell {
    /// Probability the raw decision is "agree".
    pub p_agree: f64,
    /// Probability the response is well formed.
    pub compliance: f64,
}

impl MockCell {
    fn validate(&self) -> Result<(), ProviderError> {
        for (name, v) in [("p_agree", self.p_agree), ("compliance", self.compliance)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ProviderError::Config(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Endorsement probability after polarity normalization.
    pub fn p_act(&self, frame: Frame) -> f64 {
        match frame.polarity() {
            Polarity::Positive => self.p_agree,
            Polarity::Negative => 1.0 - self.p_agree,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockModelConfig {
    /// Cells used for any scenario without an override. `None` makes every
    /// scenario not listed in `scenarios` an error.
    pub default: Option<[MockCell; 4]>,
    #[serde(default)]
    pub scenarios: BTreeMap<String, [MockCell; 4]>,
    pub seed: u64,
    #[serde(default)]
    pub coupling: DrawCoupling,
}

impl MockModelConfig {
    pub fn uniform(p_agree: f64, compliance: f64, seed: u64) -> Result<Self, ProviderError> {
        let cell = MockCell { p_agree, compliance };
        cell.validate()?;
        Ok(MockModelConfig {
            default: Some([cell; 4]),
            scenarios: BTreeMap::new(),
            seed,
            coupling: DrawCoupling::SharedDraw,
        })
    }

    /// Config whose LPN endorsement rates are `rates` (F0..F3) on every scenario.
    pub fn from_lpn_rates(rates: [f64; 4], compliance: f64, seed: u64) -> Result<Self, ProviderError> {
        let mut cells = [MockCell { p_agree: 0.0, compliance }; 4];
        for frame in Frame::ALL {
            let p = rates[frame.index()];
            if !(0.0..=1.0).contains(&p) {
                return Err(ProviderError::Config(format!("{frame} endorsement rate {p} outside [0, 1]")));
            }
            cells[frame.index()].p_agree = match frame.polarity() {
                Polarity::Positive => p,
                Polarity::Negative => 1.0 - p,
            };
            cells[frame.index()].validate()?;
        }
        Ok(MockModelConfig {
            default: Some(cells),
            scenarios: BTreeMap::new(),
            seed,
            coupling: DrawCoupling::SharedDraw,
        })
    }

    pub fn with_scenario(mut self, scenario: &str, cells: [MockCell; 4]) -> Result<Self, ProviderError> {
        for c in &cells {
            c.validate()?;
        }
        self.scenarios.insert(scenario.to_string(), cells);
        Ok(self)
    }

    pub fn set_compliance(&mut self, compliance: f64) -> Result<(), ProviderError> {
        let cells = self.default.iter_mut().chain(self.scenarios.values_mut());
        for group in cells {
            for c in group.iter_mut() {
                c.compliance = compliance;
                c.validate()?;
            }
        }
        Ok(())
    }

    pub fn cell(&self, scenario: &str, frame: Frame) -> Result<MockCell, ProviderError> {
        self.scenarios
            .get(scenario)
            .or(self.default.as_ref())
            .map(|cells| cells[frame.index()])
            .ok_or_else(|| ProviderError::Config(format!("mock config does not cover scenario `{scenario}`")))
    }

    /// LPN endorsement rates per frame for `scenario`.
    pub fn lpn_rates(&self, scenario: &str) -> Result<[f64; 4], ProviderError> {
        let mut out = [0.0; 4];
        for frame in Frame::ALL {
            out[frame.index()] = self.cell(scenario, frame)?.p_act(frame);
        }
        Ok(out)
    }
}

/// LPN-space rates (p, p, p, p + t) with p = (1 − t)/2, as raw agree
/// probabilities. All frames are fully compliant.
pub fn build_negation_fragile_mock(svi_target: f64, seed: u64) -> Result<MockModelConfig, ProviderError> {
    if !(0.0..=1.0).contains(&svi_target) {
        return Err(ProviderError::Config(format!("svi_target {svi_target} outside [0, 1]")));
    }
    let p = (1.0 - svi_target) / 2.0;
    let top = (p + svi_target).clamp(0.0, 1.0);
    MockModelConfig::from_lpn_rates([p, p, p, top], 1.0, seed)
}

fn uniform(seed: u64, scenario: &str, frame: Option<Frame>, draw: u32, purpose: &str) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(scenario.as_bytes());
    h.update([0u8]);
    h.update(frame.map(|f| f.as_str()).unwrap_or("*").as_bytes());
    h.update(draw.to_le_bytes());
    h.update(purpose.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    (u64::from_le_bytes(bytes) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn score(seed: u64, scenario: &str, frame: Frame, draw: u32, field: &str) -> u8 {
    (uniform(seed, scenario, Some(frame), draw, field) * 101.0) as u8
}

const REASONS: [&str; 4] = [
    "The stated goal is weighed against the harm the action causes to others.",
    "Legal and social costs are compared with the benefit described in the scenario.",
    "The outcome for the people directly affected carries the most weight here.",
    "Alternatives that avoid the action appear limited given the circumstances.",
];

const PROSE_ONLY: [&str; 2] = [
    "I am not able to give a structured answer to this dilemma. It depends on many factors.",
    "Decision: agree. Confidence is moderate and the reasoning is that the goal matters.",
];

/// Raw completion for one draw. Errors only when `scenario` is not covered.
pub fn mock_generate(
    config: &MockModelConfig,
    scenario: &str,
    frame: Frame,
    draw_index: u32,
) -> Result<String, ProviderError> {
    let cell = config.cell(scenario, frame)?;
    let seed = config.seed;
    let latent_frame = match config.coupling {
        DrawCoupling::SharedDraw => None,
        DrawCoupling::Independent => Some(frame),
    };
    let u = uniform(seed, scenario, latent_frame, draw_index, "decision");
    let decision = decision_for(frame, u < cell.p_act(frame));

    let mut record = DecisionRecord {
        decision,
        confidence: score(seed, scenario, frame, draw_index, "confidence"),
        adherence_to_laws: score(seed, scenario, frame, draw_index, "laws"),
        adherence_to_social_ethics: score(seed, scenario, frame, draw_index, "ethics"),
        objective_positive_consequences: score(seed, scenario, frame, draw_index, "positive"),
        objective_negative_consequences: score(seed, scenario, frame, draw_index, "negative"),
        reasoning: REASONS[(uniform(seed, scenario, Some(frame), draw_index, "reason") * 4.0) as usize].to_string(),
    };

    let style = uniform(seed, scenario, Some(frame), draw_index, "style");
    let well_formed = uniform(seed, scenario, Some(frame), draw_index, "compliance") < cell.compliance;
    if well_formed {
        let json = record.to_json();
        return Ok(if style < 0.5 {
            json
        } else if style < 0.8 {
            format!("```json\n{json}\n```")
        } else {
            format!("Here is my assessment of the proposal.\n\n{json}")
        });
    }

    let kind = (style * 4.0) as usize;
    Ok(match kind {
        0 => {
            let json = record.to_json();
            let cut = json.len() * 2 / 3;
            format!("```json\n{}", &json[..cut])
        }
        1 => PROSE_ONLY[(uniform(seed, scenario, Some(frame), draw_index, "prose") * 2.0) as usize].to_string(),
        2 => {
            let json = record.to_json();
            let bad = format!("\"confidence\":{}", record.confidence);
            json.replacen(&bad, "\"confidence\":150", 1)
        }
        _ => {
            record.decision = Decision::Agree;
            record.to_json().replacen("\"decision\":\"agree\"", "\"decision\":\"it depends\"", 1)
        }
    })
}

/// [`Provider`] over a [`MockModelConfig`]. At temperature 0 every draw
/// returns the draw-0 completion, mimicking greedy decoding.
#[derive(Debug, Clone)]
pub struct MockProvider {
    config: MockModelConfig,
}

impl MockProvider {
    pub fn new(config: MockModelConfig) -> Self {
        MockProvider { config }
    }

    pub fn config(&self) -> &MockModelConfig {
        &self.config
    }
}

impl Provider for MockProvider {
    fn complete(
        &self,
        prompt: &PromptInstance,
        temperature: Option<f64>,
        draw_index: u32,
    ) -> Result<String, ProviderError> {
        let draw = if temperature == Some(0.0) { 0 } else { draw_index };
        mock_generate(&self.config, &prompt.scenario_id, prompt.frame, draw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_response, FailureReason};
    use crate::lpn::lpn;

    #[test]
    fn degenerate_probabilities() {
        let cfg = MockModelConfig::uniform(1.0, 1.0, 9).unwrap();
        for d in 0..50 {
            let out = parse_response(&mock_generate(&cfg, "s", Frame::F2, d).unwrap());
            assert_eq!(out.decision(), Some(Decision::Agree));
        }
        let cfg = MockModelConfig::uniform(0.5, 0.0, 9).unwrap();
        for d in 0..200 {
            assert!(!parse_response(&mock_generate(&cfg, "s", Frame::F1, d).unwrap()).is_valid());
        }
    }

    #[test]
    fn malformed_outputs_carry_expected_reasons() {
        let cfg = MockModelConfig::uniform(0.5, 0.0, 1).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for d in 0..400 {
            let out = parse_response(&mock_generate(&cfg, "s", Frame::F0, d).unwrap());
            let tag = match out.failure_reason.unwrap() {
                FailureReason::TruncatedJson => "truncated",
                FailureReason::NoJsonObject => "prose",
                FailureReason::ScoreOutOfRange(_) => "range",
                FailureReason::UnrecognizedDecision(_) => "token",
                other => panic!("unexpected {other:?}"),
            };
            seen.insert(tag);
        }
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn deterministic_bytes() {
        let cfg = MockModelConfig::uniform(0.5, 0.5, 1)
            .unwrap()
            .with_scenario("s", [MockCell { p_agree: 0.2, compliance: 0.7 }; 4])
            .unwrap();
        let a: Vec<String> = (0..100).map(|d| mock_generate(&cfg, "s", Frame::F1, d).unwrap()).collect();
        let b: Vec<String> = (0..100).map(|d| mock_generate(&cfg, "s", Frame::F1, d).unwrap()).collect();
        assert_eq!(a, b);
        let mut other = cfg.clone();
        other.seed = 2;
        let c: Vec<String> = (0..100).map(|d| mock_generate(&other, "s", Frame::F1, d).unwrap()).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn uncovered_scenario_is_config_error() {
        let cfg =
            MockModelConfig { default: None, scenarios: BTreeMap::new(), seed: 0, coupling: DrawCoupling::SharedDraw };
        assert!(matches!(mock_generate(&cfg, "x", Frame::F0, 0), Err(ProviderError::Config(_))));
    }

    #[test]
    fn agree_and_validity_rates() {
        let cfg = MockModelConfig::uniform(0.5, 0.9, 77).unwrap();
        let (mut agree, mut valid, mut total) = (0, 0, 0);
        for d in 0..10_000 {
            let out = parse_response(&mock_generate(&cfg, "s", Frame::F0, d).unwrap());
            total += 1;
            if let Some(dec) = out.decision() {
                valid += 1;
                agree += (dec == Decision::Agree) as u32;
            }
        }
        let valid_rate = valid as f64 / total as f64;
        assert!((valid_rate - 0.9).abs() < 0.01, "{valid_rate}");
        let agree_rate = agree as f64 / valid as f64;
        assert!((agree_rate - 0.5).abs() < 0.015, "{agree_rate}");
    }

    #[test]
    fn fragile_mock_shape() {
        let cfg = build_negation_fragile_mock(0.0, 0).unwrap();
        let rates = cfg.lpn_rates("any").unwrap();
        assert!(rates.iter().all(|&r| r == 0.5));
        let cells = cfg.default.unwrap();
        assert!(cells.iter().all(|c| c.p_agree == 0.5));

        let cfg = build_negation_fragile_mock(1.0, 0).unwrap();
        assert_eq!(cfg.lpn_rates("any").unwrap(), [0.0, 0.0, 0.0, 1.0]);

        let cfg = build_negation_fragile_mock(0.65, 0).unwrap();
        let r = cfg.lpn_rates("any").unwrap();
        assert!((r[3] - r[0] - 0.65).abs() < 1e-12);
        assert!(build_negation_fragile_mock(1.5, 0).is_err());
    }

    #[test]
    fn lpn_inversion_recovers_targets() {
        let target = [0.287, 0.804, 0.456, 0.967];
        let cfg = MockModelConfig::from_lpn_rates(target, 1.0, 5).unwrap();
        let n = 4000;
        for frame in Frame::ALL {
            let acts = (0..n)
                .filter(|&d| {
                    let out = parse_response(&mock_generate(&cfg, "s", frame, d).unwrap());
                    lpn(frame, out.decision().unwrap()).endorsed()
                })
                .count();
            let p = target[frame.index()];
            let band = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
            assert!((acts as f64 / n as f64 - p).abs() < band, "{frame}");
        }
    }

    #[test]
    fn shared_draw_keeps_frames_nested() {
        // With a common latent value per draw, a draw endorsed under the
        // low-rate frames is always endorsed under F3 too.
        let cfg = build_negation_fragile_mock(0.65, 3).unwrap();
        for d in 0..300 {
            let act = |f: Frame| {
                lpn(f, parse_response(&mock_generate(&cfg, "s", f, d).unwrap()).decision().unwrap()).endorsed()
            };
            let low = act(Frame::F0);
            assert_eq!(low, act(Frame::F1));
            assert_eq!(low, act(Frame::F2));
            assert!(!low || act(Frame::F3));
        }
    }

    #[test]
    fn temperature_zero_collapses_draws() {
        let p = MockProvider::new(MockModelConfig::uniform(0.5, 1.0, 4).unwrap());
        let s = crate::scenario::Scenario::new("s", crate::scenario::Domain::Law, "t", "They", "x", "y");
        let prompt = crate::scenario::render_prompt(&s, Frame::F0).unwrap();
        let first = p.complete(&prompt, Some(0.0), 0).unwrap();
        for d in 1..20 {
            assert_eq!(p.complete(&prompt, Some(0.0), d).unwrap(), first);
        }
    }
}
