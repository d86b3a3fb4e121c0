//! Plot-ready exports. Output is byte-stable for a given report.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{AuditReport, ModelSummary, ReportError};
use crate::providers::Origin;
use crate::scenario::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    CsvBundle,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(ExportFormat::Json),
            "csv" | "csv_bundle" => Ok(ExportFormat::CsvBundle),
            other => Err(format!("unknown export format `{other}`")),
        }
    }
}

/// Column order of the framing-bars table.
pub const FRAMING_ORIGIN_ORDER: [Origin; 3] = [Origin::CnCommercial, Origin::UsCommercial, Origin::Oss];

pub fn model_card(summary: &ModelSummary, total_models: usize) -> String {
    let h = &summary.fragility_histogram;
    let compliance =
        summary.compliance_rate.map(|c| format!("{:.1}%", c * 100.0)).unwrap_or_else(|| "not recorded".into());
    format!(
        "Syntactic framing robustness\n\
         Model: {} ({}, {:?})\n\
         Mean SVI: {:.2} (95% CI {:.2} to {:.2}) over {} scenarios\n\
         Scenario fragility: {} robust, {} moderate, {} high\n\
         Rank: {} of {} (1 = most fragile)\n\
         Response compliance: {}\n",
        summary.model_id,
        summary.origin,
        summary.tier,
        summary.mean_svi,
        summary.svi_ci.lo,
        summary.svi_ci.hi,
        summary.n_scenarios,
        h.robust,
        h.moderate,
        h.high,
        summary.rank,
        total_models,
        compliance
    )
}

#[derive(Serialize)]
struct JsonExport<'a> {
    report: &'a AuditReport,
    model_cards: BTreeMap<&'a str, String>,
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    fs::write(path, bytes).map_err(|source| ReportError::Io { path: path.display().to_string(), source })
}

fn csv_bytes(rows: Vec<Vec<String>>) -> Result<Vec<u8>, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| ReportError::Csv(e.into_error().into()))
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Models grouped by origin, most fragile first within each origin.
pub fn heatmap_rows(report: &AuditReport) -> Vec<Vec<String>> {
    let scenario_ids: Vec<&str> = report.scenarios.iter().map(|s| s.scenario_id.as_str()).collect();
    let mut svi: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for c in &report.cells {
        svi.insert((&c.model, &c.scenario), c.svi);
    }
    let mut models: Vec<&ModelSummary> = report.models.iter().collect();
    models.sort_by_key(|m| (m.origin, m.rank));

    let mut header = vec!["model_id".to_string(), "origin".to_string()];
    header.extend(scenario_ids.iter().map(|s| s.to_string()));
    let mut rows = vec![header];
    for m in models {
        let mut row = vec![m.model_id.clone(), m.origin.short().to_string()];
        row.extend(scenario_ids.iter().map(|s| opt(svi.get(&(m.model_id.as_str(), *s)).copied())));
        rows.push(row);
    }
    rows
}

pub fn framing_rows(report: &AuditReport) -> Vec<Vec<String>> {
    let rates = report.origins.as_ref().map(|o| &o.frame_rates);
    let origins: Vec<Origin> =
        FRAMING_ORIGIN_ORDER.into_iter().filter(|o| rates.is_some_and(|r| r.contains_key(o))).collect();
    let mut header = vec!["frame".to_string(), "pattern".to_string()];
    header.extend(origins.iter().map(|o| o.short().to_string()));
    let mut rows = vec![header];
    for frame in Frame::ALL {
        let mut row = vec![frame.as_str().to_string(), frame.pattern().to_string()];
        row.extend(origins.iter().map(|o| num(rates.expect("origins present")[o][frame])));
        rows.push(row);
    }
    rows
}

fn ranking_rows(report: &AuditReport) -> Vec<Vec<String>> {
    let header = [
        "rank",
        "model_id",
        "origin",
        "tier",
        "mean_svi",
        "ci_lo",
        "ci_hi",
        "compliance_rate",
        "robust",
        "moderate",
        "high",
    ];
    let mut rows = vec![header.iter().map(|s| s.to_string()).collect()];
    for m in &report.models {
        let h = &m.fragility_histogram;
        rows.push(vec![
            m.rank.to_string(),
            m.model_id.clone(),
            m.origin.short().to_string(),
            format!("{:?}", m.tier).to_uppercase(),
            num(m.mean_svi),
            num(m.svi_ci.lo),
            num(m.svi_ci.hi),
            opt(m.compliance_rate),
            h.robust.to_string(),
            h.moderate.to_string(),
            h.high.to_string(),
        ]);
    }
    rows
}

fn scenario_rows(report: &AuditReport) -> Vec<Vec<String>> {
    let header = ["scenario_id", "domain", "mean_svi", "ci_lo", "ci_hi", "n_models", "risk_band"];
    let mut rows = vec![header.iter().map(|s| s.to_string()).collect()];
    for s in &report.scenarios {
        rows.push(vec![
            s.scenario_id.clone(),
            s.domain.map(|d| d.as_str().to_string()).unwrap_or_default(),
            num(s.mean_svi),
            num(s.ci.lo),
            num(s.ci.hi),
            s.n_models.to_string(),
            serde_json::to_value(s.risk_band).expect("band").as_str().unwrap_or("").to_string(),
        ]);
    }
    rows
}

fn pair_rows(report: &AuditReport) -> Vec<Vec<String>> {
    let header = ["family", "baseline_model", "enhanced_model", "svi_baseline", "svi_enhanced", "delta"];
    let mut rows = vec![header.iter().map(|s| s.to_string()).collect()];
    for p in &report.reasoning_pairs {
        rows.push(vec![
            p.family.clone(),
            p.baseline_model.clone(),
            p.enhanced_model.clone(),
            num(p.svi_baseline),
            num(p.svi_enhanced),
            num(p.delta),
        ]);
    }
    rows
}

/// Writes the export into `dir` and returns the files written.
pub fn export(report: &AuditReport, format: ExportFormat, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io { path: dir.display().to_string(), source })?;
    match format {
        ExportFormat::Json => {
            let total = report.models.len();
            let doc = JsonExport {
                report,
                model_cards: report.models.iter().map(|m| (m.model_id.as_str(), model_card(m, total))).collect(),
            };
            let path = dir.join("report.json");
            let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
            text.push('\n');
            write(&path, text.as_bytes())?;
            Ok(vec![path])
        }
        ExportFormat::CsvBundle => {
            let files = [
                ("heatmap.csv", heatmap_rows(report)),
                ("ranking.csv", ranking_rows(report)),
                ("framing_bars.csv", framing_rows(report)),
                ("scenario_ci.csv", scenario_rows(report)),
                ("reasoning_pairs.csv", pair_rows(report)),
            ];
            let mut written = Vec::new();
            for (name, rows) in files {
                let path = dir.join(name);
                write(&path, &csv_bytes(rows)?)?;
                written.push(path);
            }
            Ok(written)
        }
    }
}
