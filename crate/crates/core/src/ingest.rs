//! Decision extraction from raw model output and per-model compliance.
//!
//! Models are told to return a single bare JSON object but routinely wrap it
//! in code fences or prose. Extraction is lenient about the wrapper and
//! strict about the object: a record is valid only when every schema field is
//! present, every score is an integer in `[0, 100]`, and the decision token is
//! `agree` or `disagree` (case-insensitive, trimmed). Nothing is clamped or
//! repaired; anything else is missing data.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Agree,
    Disagree,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Agree => "agree",
            Decision::Disagree => "disagree",
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Decision::Agree => Decision::Disagree,
            Decision::Disagree => Decision::Agree,
        }
    }
}

pub const SCORE_FIELDS: [&str; 5] = [
    "confidence",
    "adherence_to_laws",
    "adherence_to_social_ethics",
    "objective_positive_consequences",
    "objective_negative_consequences",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub decision: Decision,
    pub confidence: u8,
    pub adherence_to_laws: u8,
    pub adherence_to_social_ethics: u8,
    pub objective_positive_consequences: u8,
    pub objective_negative_consequences: u8,
    pub reasoning: String,
}

impl DecisionRecord {
    /// Compact single-line JSON in schema field order.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// Why a response failed to yield a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum FailureReason {
    NoJsonObject,
    TruncatedJson,
    MissingField(String),
    WrongType(String),
    ScoreOutOfRange(String),
    UnrecognizedDecision(String),
    /// Transport failure; no response body was received.
    SampleFailed(String),
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureReason::NoJsonObject => f.write_str("no JSON object found"),
            FailureReason::TruncatedJson => f.write_str("truncated JSON object"),
            FailureReason::MissingField(name) => write!(f, "schema field missing: {name}"),
            FailureReason::WrongType(name) => write!(f, "schema field has wrong type: {name}"),
            FailureReason::ScoreOutOfRange(name) => write!(f, "score out of range: {name}"),
            FailureReason::UnrecognizedDecision(tok) => write!(f, "unrecognized decision token: {tok:?}"),
            FailureReason::SampleFailed(msg) => write!(f, "sample failed: {msg}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseStatus {
    Valid,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseOutcome {
    pub status: ParseStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<DecisionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_reason: Option<FailureReason>,
    /// Omitted from serialized output when empty (run records keep the raw
    /// completion in their own field).
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub raw_text: String,
}

impl ParseOutcome {
    pub fn valid(record: DecisionRecord, raw: &str) -> Self {
        ParseOutcome {
            status: ParseStatus::Valid,
            record: Some(record),
            failure_reason: None,
            raw_text: raw.to_string(),
        }
    }

    pub fn invalid(reason: FailureReason, raw: &str) -> Self {
        ParseOutcome {
            status: ParseStatus::Invalid,
            record: None,
            failure_reason: Some(reason),
            raw_text: raw.to_string(),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.status == ParseStatus::Valid
    }

    pub fn decision(&self) -> Option<Decision> {
        self.record.as_ref().map(|r| r.decision)
    }
}

/// Scans forward from the `{` at `start` and returns the end index (exclusive)
/// of the balanced object, or `None` when input ends first.
fn balanced_end(bytes: &[u8], start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

enum Extracted {
    Object(Map<String, Value>, usize),
    Truncated,
    Nothing,
}

fn extract_first_object(text: &str) -> Extracted {
    let bytes = text.as_bytes();
    let mut saw_unterminated = false;
    let mut pos = 0;
    while let Some(off) = text[pos..].find('{') {
        let start = pos + off;
        match balanced_end(bytes, start) {
            Some(end) => {
                if let Ok(Value::Object(map)) = serde_json::from_str::<Value>(&text[start..end]) {
                    return Extracted::Object(map, end);
                }
            }
            None => saw_unterminated = true,
        }
        pos = start + 1;
    }
    if saw_unterminated {
        Extracted::Truncated
    } else {
        Extracted::Nothing
    }
}

fn score_field(map: &Map<String, Value>, name: &str) -> Result<u8, FailureReason> {
    let value = map.get(name).ok_or_else(|| FailureReason::MissingField(name.to_string()))?;
    let number = match value {
        Value::Number(n) => n,
        _ => return Err(FailureReason::WrongType(name.to_string())),
    };
    let as_int = if let Some(i) = number.as_i64() {
        i as f64
    } else if let Some(u) = number.as_u64() {
        u as f64
    } else {
        let f = number.as_f64().unwrap_or(f64::NAN);
        if f.fract() != 0.0 {
            return Err(FailureReason::WrongType(name.to_string()));
        }
        f
    };
    if !(0.0..=100.0).contains(&as_int) {
        return Err(FailureReason::ScoreOutOfRange(name.to_string()));
    }
    Ok(as_int as u8)
}

fn validate(map: &Map<String, Value>) -> Result<DecisionRecord, FailureReason> {
    let decision = match map.get("decision") {
        None => return Err(FailureReason::MissingField("decision".into())),
        Some(Value::String(s)) => match s.trim().to_ascii_lowercase().as_str() {
            "agree" => Decision::Agree,
            "disagree" => Decision::Disagree,
            _ => return Err(FailureReason::UnrecognizedDecision(s.clone())),
        },
        Some(other) => return Err(FailureReason::UnrecognizedDecision(other.to_string())),
    };
    let mut scores = [0u8; 5];
    for (slot, name) in scores.iter_mut().zip(SCORE_FIELDS) {
        *slot = score_field(map, name)?;
    }
    let reasoning = match map.get("reasoning") {
        None => return Err(FailureReason::MissingField("reasoning".into())),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(FailureReason::WrongType("reasoning".into())),
    };
    Ok(DecisionRecord {
        decision,
        confidence: scores[0],
        adherence_to_laws: scores[1],
        adherence_to_social_ethics: scores[2],
        objective_positive_consequences: scores[3],
        objective_negative_consequences: scores[4],
        reasoning,
    })
}

/// Extracts the first complete JSON object in `raw` and validates it.
pub fn parse_response(raw: &str) -> ParseOutcome {
    let (map, end) = match extract_first_object(raw) {
        Extracted::Object(map, end) => (map, end),
        Extracted::Truncated => return ParseOutcome::invalid(FailureReason::TruncatedJson, raw),
        Extracted::Nothing => return ParseOutcome::invalid(FailureReason::NoJsonObject, raw),
    };
    if matches!(extract_first_object(&raw[end..]), Extracted::Object(..)) {
        log::warn!("response contains more than one JSON object; using the first");
    }
    match validate(&map) {
        Ok(record) => ParseOutcome::valid(record, raw),
        Err(reason) => ParseOutcome::invalid(reason, raw),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplianceCounts {
    pub attempts: u64,
    pub valid: u64,
}

impl ComplianceCounts {
    /// `None` until at least one attempt is recorded.
    pub fn rate(&self) -> Option<f64> {
        (self.attempts > 0).then(|| self.valid as f64 / self.attempts as f64)
    }
}

/// Attempt/valid counts per model. Single writer per model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComplianceLedger {
    models: BTreeMap<String, ComplianceCounts>,
}

impl ComplianceLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, model: &str, outcome: &ParseOutcome) {
        self.record(model, outcome.is_valid());
    }

    pub fn record(&mut self, model: &str, valid: bool) {
        let counts = self.models.entry(model.to_string()).or_default();
        counts.attempts += 1;
        if valid {
            counts.valid += 1;
        }
    }

    /// Bulk load, e.g. for reference aggregate counts.
    pub fn set_counts(&mut self, model: &str, attempts: u64, valid: u64) {
        assert!(valid <= attempts, "valid count exceeds attempts");
        self.models.insert(model.to_string(), ComplianceCounts { attempts, valid });
    }

    pub fn counts(&self, model: &str) -> Option<ComplianceCounts> {
        self.models.get(model).copied()
    }

    pub fn compliance_rate(&self, model: &str) -> Option<f64> {
        self.models.get(model).and_then(ComplianceCounts::rate)
    }

    pub fn models(&self) -> impl Iterator<Item = (&str, ComplianceCounts)> {
        self.models.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn totals(&self) -> ComplianceCounts {
        self.models.values().fold(ComplianceCounts::default(), |acc, c| ComplianceCounts {
            attempts: acc.attempts + c.attempts,
            valid: acc.valid + c.valid,
        })
    }
}

/// Functional form of [`ComplianceLedger::update`].
pub fn update_compliance(mut ledger: ComplianceLedger, model: &str, outcome: &ParseOutcome) -> ComplianceLedger {
    ledger.update(model, outcome);
    ledger
}

pub const DEFAULT_COMPLIANCE_THRESHOLD: f64 = 0.80;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExclusionPartition {
    pub included: Vec<String>,
    pub excluded: Vec<String>,
}

/// Excludes models whose compliance is strictly below `threshold`.
/// Models with no attempts are excluded as unmeasured.
pub fn apply_exclusion_rule(ledger: &ComplianceLedger, threshold: f64) -> ExclusionPartition {
    let mut partition = ExclusionPartition::default();
    for (model, counts) in ledger.models() {
        match counts.rate() {
            Some(rate) if rate >= threshold => partition.included.push(model.to_string()),
            Some(_) => partition.excluded.push(model.to_string()),
            None => {
                log::warn!("model {model} has no attempts; excluding as unmeasured");
                partition.excluded.push(model.to_string());
            }
        }
    }
    partition
}
