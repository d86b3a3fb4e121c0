//! Audit reports built from scored cells. The deployment gate and the
//! file exports live in submodules.

pub mod export;
pub mod gate;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fixtures::FixtureModel;
use crate::ingest::{apply_exclusion_rule, ComplianceLedger, DEFAULT_COMPLIANCE_THRESHOLD};
use crate::lpn::{CellStats, Fragility, PerFrame, PolaritySwing};
use crate::providers::{ModelSpec, Origin, ReasoningMode, Tier};
use crate::scenario::{Domain, Frame, Scenario};
use crate::stats::bootstrap::{bootstrap_ci, mean, DEFAULT_RESAMPLES};
use crate::stats::{
    bayesian_group_compare, kruskal_wallis, mann_whitney, sample_variance, IntervalEstimate, NormalPrior,
    PosteriorSummary, TestResult,
};

pub use export::{export, model_card, ExportFormat};
pub use gate::{evaluate_gate, GateConfig, GateProfile, GateScope, GateVerdict};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no complete cells to report on")]
    Empty,
    #[error("cell for model `{0}` has no model metadata")]
    UnknownModel(String),
    #[error("statistics error: {0}")]
    Stats(#[from] crate::stats::StatsError),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

/// Metadata needed to place a model in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub model_id: String,
    pub origin: Origin,
    pub tier: Tier,
    #[serde(default)]
    pub family: Option<String>,
    #[serde(default)]
    pub reasoning_mode: ReasoningMode,
}

impl From<&ModelSpec> for ModelInfo {
    fn from(s: &ModelSpec) -> Self {
        ModelInfo {
            model_id: s.model_id.clone(),
            origin: s.origin,
            tier: s.tier,
            family: s.family.clone(),
            reasoning_mode: s.reasoning_mode,
        }
    }
}

impl From<&FixtureModel> for ModelInfo {
    fn from(m: &FixtureModel) -> Self {
        let reasoning = !m.model_id.ends_with("-non-reasoning")
            && (m.model_id.ends_with("-reasoning") || m.model_id.ends_with("-thinking"));
        ModelInfo {
            model_id: m.model_id.to_string(),
            origin: m.origin,
            tier: m.tier,
            family: m.family.map(str::to_string),
            reasoning_mode: if reasoning { ReasoningMode::Enabled } else { ReasoningMode::None },
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FragilityCounts {
    pub robust: usize,
    pub moderate: usize,
    pub high: usize,
}

impl FragilityCounts {
    fn of<'a>(cells: impl IntoIterator<Item = &'a CellStats>) -> Self {
        let mut c = FragilityCounts::default();
        for cell in cells {
            match cell.fragility {
                Fragility::Robust => c.robust += 1,
                Fragility::Moderate => c.moderate += 1,
                Fragility::High => c.high += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.robust + self.moderate + self.high
    }

    pub fn shares(&self) -> [f64; 3] {
        let n = self.total().max(1) as f64;
        [self.robust as f64 / n, self.moderate as f64 / n, self.high as f64 / n]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalSummary {
    pub n_cells: usize,
    /// Mean over model–scenario cells.
    pub mean_svi: f64,
    pub ci: IntervalEstimate,
    pub sd: Option<f64>,
    pub fragility: FragilityCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model_id: String,
    pub origin: Origin,
    pub tier: Tier,
    pub mean_svi: f64,
    /// Bootstrap over the model's scenario-level SVIs.
    pub svi_ci: IntervalEstimate,
    pub n_scenarios: usize,
    pub compliance_rate: Option<f64>,
    pub fragility_histogram: FragilityCounts,
    /// 1 = most fragile. Ties go to the lexicographically smaller model_id.
    pub rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskBand {
    Low,
    Mid,
    High,
}

pub const HIGH_RISK_ABOVE: f64 = 0.5;
pub const LOW_RISK_BELOW: f64 = 0.3;

/// `> 0.5` high, `< 0.3` low, otherwise mid.
pub fn risk_band(svi: f64) -> RiskBand {
    if svi > HIGH_RISK_ABOVE {
        RiskBand::High
    } else if svi < LOW_RISK_BELOW {
        RiskBand::Low
    } else {
        RiskBand::Mid
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioProfile {
    pub scenario_id: String,
    pub domain: Option<Domain>,
    pub mean_svi: f64,
    /// Bootstrap over the scenario's per-model SVIs.
    pub ci: IntervalEstimate,
    pub n_models: usize,
    pub risk_band: RiskBand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub a: Origin,
    pub b: Origin,
    /// Mann–Whitney U of `a` against `b`; Cliff's delta is negative when
    /// `a` is less fragile. `p_adjusted` is Bonferroni over all pairs.
    pub test: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginComparison {
    /// Mean LPN endorsement rate per frame over each origin's cells.
    pub frame_rates: BTreeMap<Origin, PerFrame<f64>>,
    pub polarity_swings: Vec<PolaritySwing>,
    /// Per-model mean SVIs grouped by origin.
    pub model_svis: BTreeMap<Origin, Vec<f64>>,
    pub kruskal_wallis: Option<TestResult>,
    pub pairwise: Vec<PairwiseComparison>,
    pub posteriors: BTreeMap<String, PosteriorSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningPairDelta {
    pub family: String,
    pub baseline_model: String,
    pub enhanced_model: String,
    pub svi_baseline: f64,
    pub svi_enhanced: f64,
    /// Negative when the reasoning variant is less fragile.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub global: GlobalSummary,
    pub models: Vec<ModelSummary>,
    pub scenarios: Vec<ScenarioProfile>,
    pub origins: Option<OriginComparison>,
    pub reasoning_pairs: Vec<ReasoningPairDelta>,
    /// Per frame; `None` where no scenario had two models with a majority.
    pub inter_model_agreement: BTreeMap<Frame, Option<f64>>,
    pub agreement_metric: String,
    pub excluded_models: Vec<String>,
    pub compliance_threshold: f64,
    /// Share of tested cells whose Cochran's Q survives BH, when known.
    pub significant_cell_share: Option<f64>,
    pub cells: Vec<CellStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    pub seed: u64,
    pub resamples: usize,
    pub compliance_threshold: f64,
    pub prior: NormalPrior,
    pub significant_cell_share: Option<f64>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            seed: 0,
            resamples: DEFAULT_RESAMPLES,
            compliance_threshold: DEFAULT_COMPLIANCE_THRESHOLD,
            prior: NormalPrior::default(),
            significant_cell_share: None,
        }
    }
}

pub const AGREEMENT_METRIC: &str = "mean pairwise agreement of per-cell majority LPN actions (stand-in; ties excluded)";

/// Assembles the full report. Models in `ledger` with compliance below the
/// threshold are dropped before anything is computed; models absent from
/// the ledger are kept.
pub fn build_report(
    cells: &[CellStats],
    ledger: &ComplianceLedger,
    models: &[ModelInfo],
    scenarios: &[Scenario],
    opts: &ReportOptions,
) -> Result<AuditReport, ReportError> {
    let excluded: BTreeSet<String> =
        apply_exclusion_rule(ledger, opts.compliance_threshold).excluded.into_iter().collect();
    let cells: Vec<CellStats> = cells.iter().filter(|c| !excluded.contains(&c.model)).cloned().collect();
    if cells.is_empty() {
        return Err(ReportError::Empty);
    }
    let info: BTreeMap<&str, &ModelInfo> = models.iter().map(|m| (m.model_id.as_str(), m)).collect();
    for c in &cells {
        if !info.contains_key(c.model.as_str()) {
            return Err(ReportError::UnknownModel(c.model.clone()));
        }
    }

    let svis: Vec<f64> = cells.iter().map(|c| c.svi).collect();
    let global = GlobalSummary {
        n_cells: cells.len(),
        mean_svi: mean(&svis),
        ci: bootstrap_ci(&svis, mean, opts.resamples, 0.95, opts.seed)?,
        sd: sample_variance(&svis).map(f64::sqrt),
        fragility: FragilityCounts::of(&cells),
    };

    let mut by_model: BTreeMap<&str, Vec<&CellStats>> = BTreeMap::new();
    let mut by_scenario: BTreeMap<&str, Vec<&CellStats>> = BTreeMap::new();
    for c in &cells {
        by_model.entry(&c.model).or_default().push(c);
        by_scenario.entry(&c.scenario).or_default().push(c);
    }

    let mut summaries = Vec::new();
    for (model, mc) in &by_model {
        let m = info[model];
        let v: Vec<f64> = mc.iter().map(|c| c.svi).collect();
        summaries.push(ModelSummary {
            model_id: model.to_string(),
            origin: m.origin,
            tier: m.tier,
            mean_svi: mean(&v),
            svi_ci: bootstrap_ci(&v, mean, opts.resamples, 0.95, opts.seed)?,
            n_scenarios: v.len(),
            compliance_rate: ledger.compliance_rate(model),
            fragility_histogram: FragilityCounts::of(mc.iter().copied()),
            rank: 0,
        });
    }
    rank_models(&mut summaries);

    let order: BTreeMap<&str, usize> = scenarios.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    let mut profiles = Vec::new();
    for (sid, sc) in &by_scenario {
        let v: Vec<f64> = sc.iter().map(|c| c.svi).collect();
        let m = mean(&v);
        profiles.push(ScenarioProfile {
            scenario_id: sid.to_string(),
            domain: scenarios.iter().find(|s| s.id == *sid).map(|s| s.domain),
            mean_svi: m,
            ci: bootstrap_ci(&v, mean, opts.resamples, 0.95, opts.seed)?,
            n_models: v.len(),
            risk_band: risk_band(m),
        });
    }
    profiles.sort_by_key(|p| (order.get(p.scenario_id.as_str()).copied().unwrap_or(usize::MAX), p.scenario_id.clone()));

    let origins = origin_comparison(&cells, &summaries, &info, opts)?;

    let pairs = reasoning_pairs_from_families(models);
    let reasoning_pairs = reasoning_pair_deltas(&summaries, &pairs);

    Ok(AuditReport {
        global,
        models: summaries,
        scenarios: profiles,
        origins,
        reasoning_pairs,
        inter_model_agreement: inter_model_agreement(&cells),
        agreement_metric: AGREEMENT_METRIC.to_string(),
        excluded_models: excluded.into_iter().collect(),
        compliance_threshold: opts.compliance_threshold,
        significant_cell_share: opts.significant_cell_share,
        cells,
    })
}

/// Sorts by mean SVI descending, ties by model_id, and assigns ranks 1..M.
pub fn rank_models(summaries: &mut [ModelSummary]) {
    summaries.sort_by(|a, b| b.mean_svi.total_cmp(&a.mean_svi).then_with(|| a.model_id.cmp(&b.model_id)));
    for (i, s) in summaries.iter_mut().enumerate() {
        s.rank = i + 1;
    }
}

fn origin_comparison(
    cells: &[CellStats],
    summaries: &[ModelSummary],
    info: &BTreeMap<&str, &ModelInfo>,
    opts: &ReportOptions,
) -> Result<Option<OriginComparison>, ReportError> {
    let mut rate_sums: BTreeMap<Origin, ([f64; 4], usize)> = BTreeMap::new();
    for c in cells {
        let entry = rate_sums.entry(info[c.model.as_str()].origin).or_insert(([0.0; 4], 0));
        for f in Frame::ALL {
            entry.0[f.index()] += c.p_act[f];
        }
        entry.1 += 1;
    }
    let frame_rates: BTreeMap<Origin, PerFrame<f64>> =
        rate_sums.into_iter().map(|(o, (sum, n))| (o, PerFrame(sum.map(|s| s / n as f64)))).collect();
    let polarity_swings = frame_rates
        .iter()
        .filter_map(|(o, r)| PolaritySwing::new(o.short(), r[Frame::F0], r[Frame::F3]).ok())
        .collect();

    let mut model_svis: BTreeMap<Origin, Vec<f64>> = BTreeMap::new();
    for s in summaries {
        model_svis.entry(s.origin).or_default().push(s.mean_svi);
    }
    if model_svis.len() < 2 {
        return Ok(Some(OriginComparison {
            frame_rates,
            polarity_swings,
            model_svis,
            kruskal_wallis: None,
            pairwise: Vec::new(),
            posteriors: BTreeMap::new(),
        }));
    }
    let groups: Vec<Vec<f64>> = model_svis.values().cloned().collect();
    let kw = kruskal_wallis(&groups).ok();

    let origins: Vec<Origin> = model_svis.keys().copied().collect();
    let n_pairs = origins.len() * (origins.len() - 1) / 2;
    let mut pairwise = Vec::new();
    for i in 0..origins.len() {
        for j in i + 1..origins.len() {
            let (a, b) = (origins[i], origins[j]);
            pairwise.push(PairwiseComparison { a, b, test: mann_whitney(&model_svis[&a], &model_svis[&b], n_pairs)? });
        }
    }

    let named: BTreeMap<String, Vec<f64>> =
        model_svis.iter().filter(|(_, v)| v.len() != 1).map(|(o, v)| (o.short().to_string(), v.clone())).collect();
    let posteriors = bayesian_group_compare(&named, opts.prior)?;

    Ok(Some(OriginComparison { frame_rates, polarity_swings, model_svis, kruskal_wallis: kw, pairwise, posteriors }))
}

/// Pairs within each family: a model with reasoning off against one with
/// reasoning on. Families without exactly that split are skipped.
pub fn reasoning_pairs_from_families(models: &[ModelInfo]) -> Vec<(String, String, String)> {
    let mut families: BTreeMap<&str, Vec<&ModelInfo>> = BTreeMap::new();
    for m in models {
        if let Some(f) = &m.family {
            families.entry(f).or_default().push(m);
        }
    }
    families
        .into_iter()
        .filter_map(|(family, members)| {
            let base: Vec<_> = members.iter().filter(|m| m.reasoning_mode == ReasoningMode::None).collect();
            let enh: Vec<_> = members.iter().filter(|m| m.reasoning_mode == ReasoningMode::Enabled).collect();
            if base.len() == 1 && enh.len() == 1 {
                Some((family.to_string(), base[0].model_id.clone(), enh[0].model_id.clone()))
            } else {
                log::warn!("family {family} is not a single baseline/reasoning pair; skipped");
                None
            }
        })
        .collect()
}

/// Deltas for (family, baseline, enhanced) triples. Pairs with a member
/// missing from `summaries` are skipped with a warning.
pub fn reasoning_pair_deltas(
    summaries: &[ModelSummary],
    pairs: &[(String, String, String)],
) -> Vec<ReasoningPairDelta> {
    let svi = |id: &str| summaries.iter().find(|s| s.model_id == id).map(|s| s.mean_svi);
    pairs
        .iter()
        .filter_map(|(family, base, enh)| match (svi(base), svi(enh)) {
            (Some(b), Some(e)) => Some(ReasoningPairDelta {
                family: family.clone(),
                baseline_model: base.clone(),
                enhanced_model: enh.clone(),
                svi_baseline: b,
                svi_enhanced: e,
                delta: e - b,
            }),
            _ => {
                log::warn!("reasoning pair {family} ({base} vs {enh}) has a member without results; skipped");
                None
            }
        })
        .collect()
}

/// Majority LPN action of a cell in one frame. `None` on an exact tie.
fn majority(c: &CellStats, frame: Frame) -> Option<bool> {
    let p = c.p_act[frame];
    if p > 0.5 {
        Some(true)
    } else if p < 0.5 {
        Some(false)
    } else {
        None
    }
}

/// For each frame: over scenarios with at least two models holding a
/// majority action, the mean share of model pairs whose majorities agree.
pub fn inter_model_agreement(cells: &[CellStats]) -> BTreeMap<Frame, Option<f64>> {
    let mut by_scenario: BTreeMap<&str, Vec<&CellStats>> = BTreeMap::new();
    for c in cells {
        by_scenario.entry(&c.scenario).or_default().push(c);
    }
    Frame::ALL
        .into_iter()
        .map(|frame| {
            let rates: Vec<f64> = by_scenario
                .values()
                .filter_map(|group| {
                    let votes: Vec<bool> = group.iter().filter_map(|c| majority(c, frame)).collect();
                    if votes.len() < 2 {
                        return None;
                    }
                    let (mut agree, mut pairs) = (0usize, 0usize);
                    for i in 0..votes.len() {
                        for j in i + 1..votes.len() {
                            pairs += 1;
                            agree += (votes[i] == votes[j]) as usize;
                        }
                    }
                    Some(agree as f64 / pairs as f64)
                })
                .collect();
            (frame, (!rates.is_empty()).then(|| mean(&rates)))
        })
        .collect()
}

/// One single-scenario cell per fixture model, with every frame rate set
/// so that the cell SVI equals the reference model SVI.
pub fn fixture_cells(models: &[FixtureModel]) -> Vec<CellStats> {
    models
        .iter()
        .map(|m| {
            let rates = PerFrame([0.0, m.svi, 0.0, 0.0]);
            CellStats::from_rates(m.model_id, "fixture", PerFrame([1; 4]), rates)
        })
        .collect()
}
