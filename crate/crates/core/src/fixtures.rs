//! Reference audit figures used as test oracles and demo input.
//!
//! Per-model SVIs are rounded to two decimals in the source tables, so
//! statistics recomputed from them differ slightly from the reference ones.

use std::collections::BTreeMap;

use crate::providers::{Origin, Tier};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureModel {
    pub model_id: &'static str,
    pub provider: &'static str,
    pub tier: Tier,
    pub origin: Origin,
    pub svi: f64,
    /// Compliance rate, where the ranking table lists one.
    pub compliance: Option<f64>,
    pub family: Option<&'static str>,
}

const fn m(
    model_id: &'static str,
    provider: &'static str,
    tier: Tier,
    origin: Origin,
    svi: f64,
    compliance: Option<f64>,
    family: Option<&'static str>,
) -> FixtureModel {
    FixtureModel { model_id, provider, tier, origin, svi, compliance, family }
}

use Origin::{CnCommercial as CN, Oss as OSS, UsCommercial as US};
use Tier::{Large, Medium, Small, Tiny};

/// The 23 included models with their mean SVI.
pub const MODELS: [FixtureModel; 23] = [
    m("gpt-5-mini", "OpenAI", Small, US, 0.34, Some(1.00), None),
    m("gpt-5.1", "OpenAI", Large, US, 0.20, Some(1.00), None),
    m("gpt-5.2", "OpenAI", Large, US, 0.41, None, None),
    m("claude-haiku-4-5", "Anthropic", Medium, US, 0.71, Some(1.00), None),
    m("claude-sonnet-4-5", "Anthropic", Large, US, 0.44, None, None),
    m("gemini-3-flash", "Google", Medium, US, 0.00, Some(0.88), None),
    m("grok-4-1-non-reasoning", "xAI", Tiny, US, 0.48, None, Some("grok-4-1")),
    m("grok-4-1-reasoning", "xAI", Tiny, US, 0.23, Some(1.00), Some("grok-4-1")),
    m("deepseek-v3p2", "DeepSeek", Small, CN, 0.24, None, None),
    m("glm-4p6", "Zhipu AI", Medium, CN, 0.43, None, None),
    m("glm-4p7", "Zhipu AI", Medium, CN, 0.13, Some(1.00), None),
    m("kimi-k2-instruct", "Moonshot", Medium, CN, 0.39, None, Some("kimi-k2")),
    m("kimi-k2-thinking", "Moonshot", Medium, CN, 0.32, None, Some("kimi-k2")),
    m("qwen3-vl-235b", "Alibaba", Large, CN, 0.50, None, None),
    m("minimax-m2", "MiniMax", Medium, CN, 0.43, None, None),
    m("llama3.2:1b", "Meta", Tiny, OSS, 0.89, Some(0.89), None),
    m("llama3.2:3b", "Meta", Tiny, OSS, 0.71, Some(1.00), None),
    m("gemma3:4b", "Google", Tiny, OSS, 0.85, Some(0.98), None),
    m("gemma3n:e4b", "Google", Tiny, OSS, 0.64, None, None),
    m("granite3.3:2b", "IBM", Tiny, OSS, 0.71, Some(1.00), None),
    m("granite4:3b", "IBM", Tiny, OSS, 0.64, None, None),
    m("phi4-mini:3.8b", "Microsoft", Tiny, OSS, 0.86, Some(1.00), None),
    m("olmo-3:7b-instruct", "AI2", Tiny, OSS, 1.00, Some(1.00), None),
];

/// Rows of the reference ranking table: (rank, model_id).
pub const REFERENCE_RANKS: [(usize, &str); 12] = [
    (1, "olmo-3:7b-instruct"),
    (2, "llama3.2:1b"),
    (3, "phi4-mini:3.8b"),
    (4, "gemma3:4b"),
    (5, "claude-haiku-4-5"),
    (6, "granite3.3:2b"),
    (7, "llama3.2:3b"),
    (17, "gpt-5-mini"),
    (20, "grok-4-1-reasoning"),
    (21, "gpt-5.1"),
    (22, "glm-4p7"),
    (23, "gemini-3-flash"),
];

/// LPN endorsement rate per frame (F0..F3) by origin.
pub fn origin_frame_rates(origin: Origin) -> [f64; 4] {
    match origin {
        Origin::CnCommercial => [0.306, 0.268, 0.344, 0.491],
        Origin::UsCommercial => [0.248, 0.402, 0.338, 0.611],
        Origin::Oss => [0.287, 0.804, 0.456, 0.967],
    }
}

/// Reference polarity swings F0 to F3, percent.
pub fn reference_swing(origin: Origin) -> f64 {
    match origin {
        Origin::CnCommercial => 58.0,
        Origin::UsCommercial => 144.0,
        Origin::Oss => 234.0,
    }
}

/// (family, baseline, enhanced)
pub const REASONING_PAIRS: [(&str, &str, &str); 2] =
    [("grok-4-1", "grok-4-1-non-reasoning", "grok-4-1-reasoning"), ("kimi-k2", "kimi-k2-instruct", "kimi-k2-thinking")];

/// Models dropped for low compliance, with their rates.
pub const EXCLUDED_MODELS: [(&str, f64); 3] =
    [("ollama_rnj-1-8b", 0.66), ("fireworks_qwen3-235b-thinking", 0.62), ("google_gemini-3-pro", 0.02)];

pub struct DataQuality {
    pub models_evaluated: usize,
    pub scenarios: usize,
    pub frames: usize,
    pub samples: usize,
    pub records: usize,
    pub parsed: usize,
    pub failures: usize,
}

pub const DATA_QUALITY: DataQuality = DataQuality {
    models_evaluated: 26,
    scenarios: 14,
    frames: 4,
    samples: 30,
    records: 43_680,
    parsed: 39_975,
    failures: 3_705,
};

/// Mean SVI at T = 0.7 and T = 0.0 in the temperature ablation.
pub const TEMPERATURE_ABLATION: (f64, f64) = (0.67, 0.80);

/// Headline numbers that need the raw audit data to reproduce.
pub struct ReferenceAggregate {
    pub mean_svi: f64,
    pub ci: (f64, f64),
    pub sd: f64,
    pub share_high: f64,
    pub share_moderate: f64,
    pub share_robust: f64,
    pub significant_cells: f64,
}

pub const REFERENCE_AGGREGATE: ReferenceAggregate = ReferenceAggregate {
    mean_svi: 0.52,
    ci: (0.42, 0.63),
    sd: 0.27,
    share_high: 0.452,
    share_moderate: 0.418,
    share_robust: 0.130,
    significant_cells: 0.619,
};

pub fn models_by_origin() -> BTreeMap<Origin, Vec<FixtureModel>> {
    let mut out: BTreeMap<Origin, Vec<FixtureModel>> = BTreeMap::new();
    for model in MODELS {
        out.entry(model.origin).or_default().push(model);
    }
    out
}

/// SVIs grouped by origin in table order.
pub fn svis_by_origin() -> BTreeMap<Origin, Vec<f64>> {
    models_by_origin().into_iter().map(|(o, ms)| (o, ms.iter().map(|m| m.svi).collect())).collect()
}

pub fn model(id: &str) -> Option<FixtureModel> {
    MODELS.iter().copied().find(|m| m.model_id == id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_sizes() {
        let by = svis_by_origin();
        assert_eq!(by[&Origin::UsCommercial].len(), 8);
        assert_eq!(by[&Origin::CnCommercial].len(), 7);
        assert_eq!(by[&Origin::Oss].len(), 8);
        assert_eq!(DATA_QUALITY.parsed + DATA_QUALITY.failures, DATA_QUALITY.records);
    }

    #[test]
    fn unique_ids_and_pairs_resolve() {
        let mut ids: Vec<_> = MODELS.iter().map(|m| m.model_id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), MODELS.len());
        for (family, base, enh) in REASONING_PAIRS {
            assert_eq!(model(base).unwrap().family, Some(family));
            assert_eq!(model(enh).unwrap().family, Some(family));
        }
    }
}
