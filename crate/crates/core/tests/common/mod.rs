//! Parser corpus shared by the oracle and acceptance targets.

#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use svi_core::ingest::FailureReason;
use svi_core::stats::dist::chi2_quantile;

/// Well-formed JSON records: (text, decision, confidence, reasoning).
pub const WELL_FORMED: [(&str, &str, u8, &str); 10] = [
    (
        r#"{"decision": "agree", "confidence": 80, "adherence_to_laws": 20, "adherence_to_social_ethics": 60, "objective_positive_consequences": 70, "objective_negative_consequences": 40, "reasoning": "The surgery prevents lasting harm."}"#,
        "agree", 80, "The surgery prevents lasting harm.",
    ),
    (
        r#"{"decision": "disagree", "confidence": 0, "adherence_to_laws": 0, "adherence_to_social_ethics": 0, "objective_positive_consequences": 0, "objective_negative_consequences": 0, "reasoning": ""}"#,
        "disagree", 0, "",
    ),
    (
        r#"{"decision":"agree","confidence":100,"adherence_to_laws":100,"adherence_to_social_ethics":100,"objective_positive_consequences":100,"objective_negative_consequences":100,"reasoning":"max"}"#,
        "agree", 100, "max",
    ),
    (
        r#"{"decision": "Disagree", "confidence": 55, "adherence_to_laws": 10, "adherence_to_social_ethics": 20, "objective_positive_consequences": 30, "objective_negative_consequences": 40, "reasoning": "Capitalized token."}"#,
        "disagree", 55, "Capitalized token.",
    ),
    (
        r#"{"decision": " AGREE ", "confidence": 61, "adherence_to_laws": 11, "adherence_to_social_ethics": 21, "objective_positive_consequences": 31, "objective_negative_consequences": 41, "reasoning": "Padded token."}"#,
        "agree", 61, "Padded token.",
    ),
    (
        r#"{"reasoning": "Field order differs.", "objective_negative_consequences": 5, "objective_positive_consequences": 6, "adherence_to_social_ethics": 7, "adherence_to_laws": 8, "confidence": 9, "decision": "disagree"}"#,
        "disagree", 9, "Field order differs.",
    ),
    (
        r#"{"decision": "agree", "confidence": 70.0, "adherence_to_laws": 50, "adherence_to_social_ethics": 50, "objective_positive_consequences": 50, "objective_negative_consequences": 50, "reasoning": "Integral float."}"#,
        "agree", 70, "Integral float.",
    ),
    (
        r#"{"decision": "disagree", "confidence": 42, "adherence_to_laws": 1, "adherence_to_social_ethics": 2, "objective_positive_consequences": 3, "objective_negative_consequences": 4, "reasoning": "Braces {inside} a \"quoted\" string."}"#,
        "disagree", 42, "Braces {inside} a \"quoted\" string.",
    ),
    (
        r#"{"decision": "agree", "confidence": 77, "adherence_to_laws": 33, "adherence_to_social_ethics": 44, "objective_positive_consequences": 55, "objective_negative_consequences": 66, "reasoning": "Extra keys are ignored.", "notes": {"a": [1, 2]}}"#,
        "agree", 77, "Extra keys are ignored.",
    ),
    (
        "{\n  \"decision\": \"disagree\",\n  \"confidence\": 90,\n  \"adherence_to_laws\": 95,\n  \"adherence_to_social_ethics\": 85,\n  \"objective_positive_consequences\": 15,\n  \"objective_negative_consequences\": 80,\n  \"reasoning\": \"Pretty printed.\"\n}",
        "disagree", 90, "Pretty printed.",
    ),
];

/// Ways models wrap the object; each must parse exactly like the bare text.
pub fn wrappers(body: &str) -> Vec<String> {
    vec![
        format!("```json\n{body}\n```"),
        format!("```\n{body}\n```"),
        format!("Here is my answer:\n{body}"),
        format!("{body}\n\nLet me know if you need more detail."),
        format!("  \n\t{body}\t\n"),
        format!("Sure. ```json\r\n{body}\r\n``` Done."),
        format!("<think>weighing the options</think>\n{body}"),
        format!("{body}\n{body}"),
    ]
}

/// Malformed responses with the reason they must be rejected for.
pub fn malformed() -> Vec<(String, FailureReason)> {
    let ok = WELL_FORMED[0].0;
    vec![
        (ok[..ok.len() / 2].to_string(), FailureReason::TruncatedJson),
        (format!("```json\n{}", &ok[..ok.len() - 1]), FailureReason::TruncatedJson),
        (format!("My answer: {}", &ok[..40]), FailureReason::TruncatedJson),
        ("I agree with this decision because it saves lives.".into(), FailureReason::NoJsonObject),
        ("".into(), FailureReason::NoJsonObject),
        ("Decision: disagree. Confidence: 80.".into(), FailureReason::NoJsonObject),
        ("[\"agree\", 80]".into(), FailureReason::NoJsonObject),
        (ok.replace("\"confidence\": 80", "\"confidence\": 150"), FailureReason::ScoreOutOfRange("confidence".into())),
        (
            ok.replace("\"adherence_to_laws\": 20", "\"adherence_to_laws\": -1"),
            FailureReason::ScoreOutOfRange("adherence_to_laws".into()),
        ),
        (ok.replace("\"confidence\": 80", "\"confidence\": 80.5"), FailureReason::WrongType("confidence".into())),
        (ok.replace("\"confidence\": 80", "\"confidence\": \"80\""), FailureReason::WrongType("confidence".into())),
        (
            ok.replace("\"decision\": \"agree\"", "\"decision\": \"it depends\""),
            FailureReason::UnrecognizedDecision("it depends".into()),
        ),
        (ok.replace("\"decision\": \"agree\", ", ""), FailureReason::MissingField("decision".into())),
        (
            ok.replace(", \"reasoning\": \"The surgery prevents lasting harm.\"", ""),
            FailureReason::MissingField("reasoning".into()),
        ),
        (
            ok.replace("\"objective_negative_consequences\": 40, ", ""),
            FailureReason::MissingField("objective_negative_consequences".into()),
        ),
    ]
}

/// Monte Carlo power of the 4-category goodness-of-fit test at effect `w`.
pub fn simulated_power(w: f64, n: u64, sims: usize, seed: u64) -> f64 {
    let d = w / 4.0;
    let probs = [0.25 + d, 0.25 - d, 0.25 + d, 0.25 - d];
    let crit = chi2_quantile(0.95, 3.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rejections = 0;
    for _ in 0..sims {
        let mut left = n;
        let mut mass = 1.0;
        let mut counts = [0u64; 4];
        for (j, p) in probs.iter().enumerate() {
            counts[j] = if j == 3 { left } else { Binomial::new(left, (p / mass).min(1.0)).unwrap().sample(&mut rng) };
            left -= counts[j];
            mass -= p;
        }
        let e = n as f64 / 4.0;
        let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        if stat > crit {
            rejections += 1;
        }
    }
    rejections as f64 / sims as f64
}
