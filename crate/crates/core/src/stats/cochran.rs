//! Cochran's Q for k related binary outcomes over matched blocks.

use serde::{Deserialize, Serialize};

use super::dist::chi2_sf;
use super::{Result, StatsError, TestResult};

/// Complete n × k matrix of 0/1 outcomes: one row per block, one column per
/// treatment (here, per frame).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryBlockMatrix {
    rows: Vec<Vec<u8>>,
    k: usize,
}

impl BinaryBlockMatrix {
    pub fn new(rows: Vec<Vec<u8>>) -> Result<Self> {
        let k = rows.first().map(Vec::len).unwrap_or(0);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(StatsError::Invalid(format!("row {i} has {} columns, expected {k}", row.len())));
            }
            if row.iter().any(|&v| v > 1) {
                return Err(StatsError::Invalid(format!("row {i} has a non-binary entry")));
            }
        }
        Ok(BinaryBlockMatrix { rows, k })
    }

    /// Builds from rows that may contain missing entries; any row with a
    /// missing entry is dropped.
    pub fn from_partial_rows(rows: impl IntoIterator<Item = Vec<Option<u8>>>) -> Result<Self> {
        let complete: Vec<Vec<u8>> =
            rows.into_iter().filter_map(|row| row.into_iter().collect::<Option<Vec<u8>>>()).collect();
        Self::new(complete)
    }

    pub fn n_blocks(&self) -> usize {
        self.rows.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    pub fn column_totals(&self) -> Vec<u64> {
        (0..self.k).map(|j| self.rows.iter().map(|r| r[j] as u64).sum()).collect()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r.iter().map(|&v| v as u64).sum()).collect()
    }
}

/// Q = k(k-1) Σ_j (C_j - T/k)² / Σ_i R_i (k - R_i), referred to χ²(k-1).
/// A matrix without any within-row variation returns Q = 0, p = 1.
pub fn cochran_q(m: &BinaryBlockMatrix) -> Result<TestResult> {
    let k = m.k();
    if k < 2 {
        return Err(StatsError::Invalid("Cochran's Q needs at least two columns".into()));
    }
    if m.n_blocks() < 2 {
        return Err(StatsError::Invalid("Cochran's Q needs at least two blocks".into()));
    }
    let kf = k as f64;
    let cols = m.column_totals();
    let rows = m.row_totals();
    let total: f64 = cols.iter().map(|&c| c as f64).sum();
    let numerator: f64 = kf * (kf - 1.0) * cols.iter().map(|&c| (c as f64 - total / kf).powi(2)).sum::<f64>();
    let denominator: f64 = rows.iter().map(|&r| r as f64 * (kf - r as f64)).sum();
    let df = (k - 1) as u32;
    if denominator == 0.0 {
        return Ok(TestResult::new(0.0, Some(df), 1.0));
    }
    let q = numerator / denominator;
    Ok(TestResult::new(q, Some(df), chi2_sf(q, df as f64)))
}
