//! From run records to scored cells and per-cell framing tests.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::RunRecord;
use crate::ingest::{ComplianceLedger, Decision};
use crate::lpn::CellStats;
use crate::scenario::Frame;
use crate::stats::{bh_adjust, cochran_q, BinaryBlockMatrix, TestResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTest {
    pub model: String,
    pub scenario: String,
    /// Draws with a valid response in all four frames.
    pub n_blocks: usize,
    /// `None` when fewer than two complete blocks remain. `p_adjusted`
    /// holds the BH-adjusted value across all tested cells.
    pub cochran: Option<TestResult>,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnscoredCell {
    pub model: String,
    pub scenario: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregation {
    pub cells: Vec<CellStats>,
    pub tests: Vec<CellTest>,
    pub unscored: Vec<UnscoredCell>,
    pub ledger: ComplianceLedger,
    pub fdr_q: f64,
}

impl Aggregation {
    pub fn significant_share(&self) -> Option<f64> {
        let tested = self.tests.iter().filter(|t| t.cochran.is_some()).count();
        (tested > 0).then(|| self.tests.iter().filter(|t| t.significant).count() as f64 / tested as f64)
    }
}

/// Scores every (model, scenario) cell. `planned_per_frame` is the number of
/// draws attempted per frame, used by the minimum-validity rule.
/// Cochran's Q pairs frames by draw index; BH runs at level `fdr_q` across
/// all cells with a test.
pub fn aggregate(records: &[RunRecord], planned_per_frame: usize, fdr_q: f64) -> Aggregation {
    let mut ledger = ComplianceLedger::new();
    let mut groups: BTreeMap<(&str, &str), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        ledger.update(&r.model_id, &r.parse);
        groups.entry((&r.model_id, &r.scenario_id)).or_default().push(r);
    }

    let mut out = Aggregation { ledger, fdr_q, ..Aggregation::default() };
    for ((model, scenario), recs) in &groups {
        let samples: Vec<(Frame, Option<Decision>)> = recs.iter().map(|r| (r.frame, r.parse.decision())).collect();
        match CellStats::score(model, scenario, &samples, planned_per_frame) {
            Ok(c) => out.cells.push(c),
            Err(e) => out.unscored.push(UnscoredCell {
                model: model.to_string(),
                scenario: scenario.to_string(),
                reason: e.to_string(),
            }),
        }

        let mut blocks: BTreeMap<u32, Vec<Option<u8>>> = BTreeMap::new();
        for r in recs {
            blocks.entry(r.draw_index).or_insert_with(|| vec![None; 4])[r.frame.index()] =
                r.lpn_action.map(|a| a.value());
        }
        let n_blocks = blocks.values().filter(|row| row.iter().all(Option::is_some)).count();
        let cochran = BinaryBlockMatrix::from_partial_rows(blocks.into_values()).and_then(|m| cochran_q(&m)).ok();
        out.tests.push(CellTest {
            model: model.to_string(),
            scenario: scenario.to_string(),
            n_blocks,
            cochran,
            significant: false,
        });
    }

    let tested: Vec<usize> = (0..out.tests.len()).filter(|&i| out.tests[i].cochran.is_some()).collect();
    let p: Vec<f64> = tested.iter().map(|&i| out.tests[i].cochran.as_ref().map(|t| t.p_value).unwrap_or(1.0)).collect();
    if let Ok(adjusted) = bh_adjust(&p) {
        for (&i, adj) in tested.iter().zip(adjusted) {
            let t = &mut out.tests[i];
            if let Some(q) = t.cochran.as_mut() {
                q.p_adjusted = Some(adj);
            }
            t.significant = adj <= fdr_q;
        }
    }
    out
}
