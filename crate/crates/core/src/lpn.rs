//! Logical polarity normalization and the Syntactic Variation Index built
//! on top of it.
//!
//! Every (frame, decision) pair is mapped onto one question: did the model
//! endorse the underlying action? Agreeing with a positive frame and
//! disagreeing with a negative frame both count as endorsement. The SVI of a
//! cell is the spread (max - min) of the endorsement rate across frames.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Index, IndexMut};

use serde::de::Deserializer;
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Decision;
use crate::scenario::{Frame, Polarity};

#[derive(Debug, Error, PartialEq)]
pub enum LpnError {
    #[error("incomplete cell: frame {0} has no valid decisions")]
    IncompleteCell(Frame),
    #[error("incomplete cell: frame {frame} has {valid} of {planned} valid samples (need at least half)")]
    InsufficientValid { frame: Frame, valid: usize, planned: usize },
    #[error("polarity swing undefined: baseline endorsement rate is zero")]
    UndefinedSwing,
    #[error("no complete cells")]
    NoData,
}

/// Binary action endorsement after polarity normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub struct ActionEndorsement(bool);

impl ActionEndorsement {
    pub fn new(endorsed: bool) -> Self {
        ActionEndorsement(endorsed)
    }

    pub fn endorsed(self) -> bool {
        self.0
    }

    pub fn value(self) -> u8 {
        self.0 as u8
    }
}

impl From<ActionEndorsement> for u8 {
    fn from(a: ActionEndorsement) -> u8 {
        a.value()
    }
}

impl TryFrom<u8> for ActionEndorsement {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(ActionEndorsement(false)),
            1 => Ok(ActionEndorsement(true)),
            other => Err(format!("action endorsement must be 0 or 1, got {other}")),
        }
    }
}

pub fn lpn(frame: Frame, decision: Decision) -> ActionEndorsement {
    let endorsed = match frame.polarity() {
        Polarity::Positive => decision == Decision::Agree,
        Polarity::Negative => decision == Decision::Disagree,
    };
    ActionEndorsement(endorsed)
}

/// Inverse of [`lpn`]: the raw decision that yields `endorsed` under `frame`.
pub fn decision_for(frame: Frame, endorsed: bool) -> Decision {
    match (frame.polarity(), endorsed) {
        (Polarity::Positive, true) | (Polarity::Negative, false) => Decision::Agree,
        _ => Decision::Disagree,
    }
}

/// A value per frame, serialized as a `{"F0": .., "F3": ..}` map.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerFrame<T>(pub [T; 4]);

impl<T> PerFrame<T> {
    pub fn iter(&self) -> impl Iterator<Item = (Frame, &T)> {
        Frame::ALL.into_iter().zip(self.0.iter())
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> PerFrame<U> {
        PerFrame([f(&self.0[0]), f(&self.0[1]), f(&self.0[2]), f(&self.0[3])])
    }
}

impl<T> Index<Frame> for PerFrame<T> {
    type Output = T;
    fn index(&self, frame: Frame) -> &T {
        &self.0[frame.index()]
    }
}

impl<T> IndexMut<Frame> for PerFrame<T> {
    fn index_mut(&mut self, frame: Frame) -> &mut T {
        &mut self.0[frame.index()]
    }
}

impl<T: Serialize> Serialize for PerFrame<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(4))?;
        for (frame, v) in self.iter() {
            map.serialize_entry(frame.as_str(), v)?;
        }
        map.end()
    }
}

impl<'de, T: Deserialize<'de> + Default + Copy> Deserialize<'de> for PerFrame<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw: BTreeMap<Frame, T> = BTreeMap::deserialize(deserializer)?;
        let mut out = PerFrame::<T>::default();
        for frame in Frame::ALL {
            out[frame] = *raw.get(&frame).ok_or_else(|| serde::de::Error::custom(format!("missing frame {frame}")))?;
        }
        Ok(out)
    }
}

/// Endorsement rate per frame; `None` where a frame has no observations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameRates(pub PerFrame<Option<f64>>);

impl FrameRates {
    pub fn from_values(values: [f64; 4]) -> Self {
        FrameRates(PerFrame(values.map(Some)))
    }

    pub fn get(&self, frame: Frame) -> Option<f64> {
        self.0[frame]
    }

    pub fn complete(&self) -> Result<PerFrame<f64>, LpnError> {
        let mut out = PerFrame([0.0; 4]);
        for frame in Frame::ALL {
            out[frame] = self.0[frame].ok_or(LpnError::IncompleteCell(frame))?;
        }
        Ok(out)
    }
}

/// Per-frame mean of LPN endorsement. Missing samples never reach this
/// function, so they drop out of numerator and denominator alike.
pub fn endorsement_rates(cell: &[(Frame, Decision)]) -> Result<PerFrame<f64>, LpnError> {
    let (endorsed, counts) = tally(cell.iter().copied());
    let mut rates = PerFrame([0.0; 4]);
    for frame in Frame::ALL {
        if counts[frame] == 0 {
            return Err(LpnError::IncompleteCell(frame));
        }
        rates[frame] = endorsed[frame] as f64 / counts[frame] as f64;
    }
    Ok(rates)
}

fn tally(cell: impl Iterator<Item = (Frame, Decision)>) -> (PerFrame<usize>, PerFrame<usize>) {
    let mut endorsed = PerFrame([0usize; 4]);
    let mut counts = PerFrame([0usize; 4]);
    for (frame, decision) in cell {
        counts[frame] += 1;
        if lpn(frame, decision).endorsed() {
            endorsed[frame] += 1;
        }
    }
    (endorsed, counts)
}

pub fn svi(rates: &FrameRates) -> Result<f64, LpnError> {
    Ok(spread(&rates.complete()?))
}

/// max - min over the four frames.
pub fn spread(rates: &PerFrame<f64>) -> f64 {
    let max = rates.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = rates.0.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fragility {
    Robust,
    Moderate,
    High,
}

impl Fragility {
    pub const ALL: [Fragility; 3] = [Fragility::Robust, Fragility::Moderate, Fragility::High];

    pub fn as_str(self) -> &'static str {
        match self {
            Fragility::Robust => "robust",
            Fragility::Moderate => "moderate",
            Fragility::High => "high",
        }
    }
}

impl fmt::Display for Fragility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const ROBUST_BELOW: f64 = 0.2;
pub const HIGH_FROM: f64 = 0.5;

/// `< 0.2` robust, `[0.2, 0.5)` moderate, `>= 0.5` high.
pub fn classify_fragility(svi: f64) -> Fragility {
    if svi < ROBUST_BELOW {
        Fragility::Robust
    } else if svi < HIGH_FROM {
        Fragility::Moderate
    } else {
        Fragility::High
    }
}

/// Relative change in endorsement from F0 to F3, in percent.
pub fn polarity_swing(p_f0: f64, p_f3: f64) -> Result<f64, LpnError> {
    if p_f0 <= 0.0 {
        return Err(LpnError::UndefinedSwing);
    }
    Ok((p_f3 - p_f0) / p_f0 * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolaritySwing {
    pub group: String,
    pub p_f0: f64,
    pub p_f3: f64,
    pub swing_pct: f64,
}

impl PolaritySwing {
    pub fn new(group: &str, p_f0: f64, p_f3: f64) -> Result<Self, LpnError> {
        Ok(PolaritySwing { group: group.to_string(), p_f0, p_f3, swing_pct: polarity_swing(p_f0, p_f3)? })
    }
}

/// Minimum share of planned samples that must be valid in every frame.
pub const MIN_VALID_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub model: String,
    pub scenario: String,
    pub n_per_frame: PerFrame<usize>,
    pub p_act: PerFrame<f64>,
    pub svi: f64,
    pub fragility: Fragility,
}

impl CellStats {
    pub fn from_rates(model: &str, scenario: &str, n_per_frame: PerFrame<usize>, p_act: PerFrame<f64>) -> Self {
        let svi = spread(&p_act);
        CellStats {
            model: model.to_string(),
            scenario: scenario.to_string(),
            n_per_frame,
            p_act,
            svi,
            fragility: classify_fragility(svi),
        }
    }

    /// Scores one cell from parsed samples (`None` = invalid response).
    /// `planned` is the number of draws attempted per frame.
    pub fn score(
        model: &str,
        scenario: &str,
        samples: &[(Frame, Option<Decision>)],
        planned: usize,
    ) -> Result<Self, LpnError> {
        let valid: Vec<(Frame, Decision)> = samples.iter().filter_map(|&(f, d)| d.map(|d| (f, d))).collect();
        let (_, counts) = tally(valid.iter().copied());
        for frame in Frame::ALL {
            if counts[frame] == 0 {
                return Err(LpnError::IncompleteCell(frame));
            }
            if (counts[frame] as f64) < MIN_VALID_FRACTION * planned as f64 {
                return Err(LpnError::InsufficientValid { frame, valid: counts[frame], planned });
            }
        }
        let rates = endorsement_rates(&valid)?;
        Ok(CellStats::from_rates(model, scenario, counts, rates))
    }
}

/// Unweighted mean of per-scenario SVI for one model.
pub fn model_svi(cells: &[CellStats]) -> Result<f64, LpnError> {
    if cells.is_empty() {
        return Err(LpnError::NoData);
    }
    Ok(cells.iter().map(|c| c.svi).sum::<f64>() / cells.len() as f64)
}

/// Round for display; internal values stay at full precision.
pub fn display_svi(svi: f64) -> String {
    format!("{svi:.2}")
}
