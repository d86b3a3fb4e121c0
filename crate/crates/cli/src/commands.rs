use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::json;
use svi_core::fixtures;
use svi_core::providers::{load_registry, DrawCoupling, MockSettings, ModelSpec, Origin, SamplingPolicy};
use svi_core::report::{
    build_report, evaluate_gate, export, fixture_cells, AuditReport, ExportFormat, GateConfig, GateProfile, GateScope,
    ModelInfo, ReportOptions,
};
use svi_core::runner::{
    self, aggregate, connect_plan, log_file, plan_cardinality, read_log, run_in_memory, temperature_ablation_plan,
    Ablation, PlanConfig, RunPlan, RunRecord, RunSummary,
};
use svi_core::scenario::{default_suite, load_scenario_suite};
use svi_core::stats::{mean, wilcoxon_signed_rank};
use svi_core::ComplianceLedger;

use crate::args::{AblateArgs, GateArgs, PlanArgs, ReportArgs, ResumeArgs, RunArgs, SimulateArgs, SourceArgs};
use crate::{CliError, EXIT_OK};

const FDR_Q: f64 = 0.05;

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn parse_temperature(s: &str) -> Result<Option<f64>, CliError> {
    if s == "provider_default" {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| CliError::Config(format!("temperature `{s}` is neither a number nor provider_default")))
}

/// Resolves the plan file (if any) and applies command-line overrides.
fn build_plan(a: &PlanArgs) -> Result<RunPlan, CliError> {
    let mut plan = match &a.plan {
        Some(path) => {
            let (cfg, base) = PlanConfig::load(path)?;
            cfg.resolve(&base)?
        }
        None => {
            let Some(_) = &a.providers else {
                return Err(CliError::Config("either --plan or --providers is required".into()));
            };
            RunPlan {
                run_id: "audit".into(),
                models: Vec::new(),
                scenarios: default_suite(),
                policy: SamplingPolicy::default(),
                ablation: Ablation::None,
                seed: 0,
            }
        }
    };
    if let Some(p) = &a.providers {
        plan.models = load_registry(&read(p)?)?;
    }
    if let Some(p) = &a.scenarios {
        plan.scenarios = load_scenario_suite(&read(p)?).map_err(|e| CliError::Config(e.to_string()))?;
    }
    if let Some(id) = &a.run_id {
        plan.run_id = id.clone();
    }
    if let Some(seed) = a.seed {
        plan.seed = seed;
    }
    if let Some(n) = a.samples {
        plan.policy.n_samples = n;
    }
    if let Some(t) = &a.temperature {
        plan.policy.temperature = parse_temperature(t)?;
    }
    plan.validate()?;
    if plan.models.is_empty() {
        return Err(CliError::Config("the plan has no models".into()));
    }
    Ok(plan)
}

fn print_json(value: &serde_json::Value) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value).expect("json");
    // A closed pipe (for example `| head`) is not an error for a report printer.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

pub fn run(a: RunArgs) -> Result<u8, CliError> {
    let plan = build_plan(&a.plan)?;
    log::info!("run {}: {} records planned", plan.run_id, plan_cardinality(&plan));
    let providers = connect_plan(&plan)?;
    let summary = runner::execute(&plan, &providers, &a.out)?;
    print_json(&json!({
        "run_id": plan.run_id,
        "log": log_file::log_path(&a.out, &plan.run_id),
        "summary": summary,
    }));
    Ok(EXIT_OK)
}

pub fn resume(a: ResumeArgs) -> Result<u8, CliError> {
    let expected = if a.plan.is_empty() { None } else { Some(build_plan(&a.plan)?) };
    let run_id = match (&a.plan.run_id, &expected) {
        (Some(id), _) => id.clone(),
        (None, Some(p)) => p.run_id.clone(),
        (None, None) => return Err(CliError::Config("--run-id is required".into())),
    };
    let r = runner::resume(&a.out, &run_id, expected.as_ref())?;
    if !r.corrupted_lines.is_empty() {
        eprintln!("svi: skipped {} corrupted log line(s); their tuples are re-queued", r.corrupted_lines.len());
    }
    let remaining = r.remainder.len();
    let summary = if remaining > 0 {
        let providers = connect_plan(&r.plan)?;
        runner::execute_remainder(&r.plan, &r.remainder, &providers, &a.out)?
    } else {
        RunSummary { run_id: run_id.clone(), per_model: BTreeMap::new() }
    };
    print_json(&json!({ "run_id": run_id, "resumed_tasks": remaining, "summary": summary }));
    Ok(EXIT_OK)
}

struct LoadedRun {
    plan: RunPlan,
    records: Vec<RunRecord>,
}

fn load_run(dir: &Path, run_id: &str) -> Result<LoadedRun, CliError> {
    let sidecar = log_file::read_plan(dir, run_id)?;
    let contents = read_log(&log_file::log_path(dir, run_id))?;
    if !contents.corrupted_lines.is_empty() {
        eprintln!("svi: ignoring {} corrupted log line(s)", contents.corrupted_lines.len());
    }
    let records: Vec<RunRecord> = contents.records.into_iter().filter(|r| r.run_id == run_id).collect();
    let expected = plan_cardinality(&sidecar.plan);
    if records.len() < expected {
        eprintln!("svi: run {run_id} is incomplete ({} of {expected} records)", records.len());
    }
    Ok(LoadedRun { plan: sidecar.plan, records })
}

fn report_for_run(run: &LoadedRun, seed: u64, threshold: f64) -> Result<(AuditReport, runner::Aggregation), CliError> {
    let agg = aggregate(&run.records, run.plan.policy.n_samples as usize, FDR_Q);
    let infos: Vec<ModelInfo> = run.plan.models.iter().map(ModelInfo::from).collect();
    let opts = ReportOptions {
        seed,
        compliance_threshold: threshold,
        significant_cell_share: agg.significant_share(),
        ..ReportOptions::default()
    };
    let report = build_report(&agg.cells, &agg.ledger, &infos, &run.plan.scenarios, &opts)?;
    Ok((report, agg))
}

fn fixture_report(seed: u64, threshold: f64) -> Result<AuditReport, CliError> {
    let infos: Vec<ModelInfo> = fixtures::MODELS.iter().map(ModelInfo::from).collect();
    let opts = ReportOptions { seed, compliance_threshold: threshold, ..ReportOptions::default() };
    Ok(build_report(&fixture_cells(&fixtures::MODELS), &ComplianceLedger::new(), &infos, &[], &opts)?)
}

fn load_report(s: &SourceArgs) -> Result<(AuditReport, Option<runner::Aggregation>, String), CliError> {
    if s.fixture {
        return Ok((fixture_report(s.seed, s.compliance_threshold)?, None, "fixture".into()));
    }
    let run_id = s.run_id.clone().ok_or_else(|| CliError::Config("--run-id or --fixture is required".into()))?;
    let run = load_run(&s.out, &run_id)?;
    let (report, agg) = report_for_run(&run, s.seed, s.compliance_threshold)?;
    Ok((report, Some(agg), run_id))
}

fn headline(report: &AuditReport) -> serde_json::Value {
    let g = &report.global;
    let [robust, moderate, high] = g.fragility.shares();
    json!({
        "cells": g.n_cells,
        "mean_svi": g.mean_svi,
        "ci95": [g.ci.lo, g.ci.hi],
        "fragility_shares": { "robust": robust, "moderate": moderate, "high": high },
        "significant_cell_share": report.significant_cell_share,
        "excluded_models": report.excluded_models,
        "ranking": report.models.iter().map(|m| json!([m.rank, m.model_id, m.mean_svi])).collect::<Vec<_>>(),
    })
}

pub fn report(a: ReportArgs) -> Result<u8, CliError> {
    let formats = match a.format.as_str() {
        "both" => vec![ExportFormat::Json, ExportFormat::CsvBundle],
        other => vec![other.parse::<ExportFormat>().map_err(CliError::Config)?],
    };
    let (report, agg, label) = load_report(&a.source)?;
    let dir: PathBuf = a.export_dir.unwrap_or_else(|| a.source.out.join(format!("{label}-report")));
    let mut files = Vec::new();
    for f in formats {
        files.extend(export(&report, f, &dir)?);
    }
    if let Some(agg) = agg {
        let path = dir.join("cell_tests.json");
        let text =
            serde_json::to_string_pretty(&json!({ "fdr_q": agg.fdr_q, "tests": agg.tests, "unscored": agg.unscored }))
                .expect("json");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        files.push(path);
    }
    print_json(&json!({ "report": headline(&report), "files": files }));
    Ok(EXIT_OK)
}

pub fn gate(a: GateArgs) -> Result<u8, CliError> {
    let scope: GateScope = a.gate_scope.parse().map_err(CliError::Config)?;
    let config = match a.gate_threshold {
        Some(t) => GateConfig::custom(t, scope).map_err(CliError::Config)?,
        None => {
            let profile: GateProfile = a.gate_profile.parse().map_err(CliError::Config)?;
            GateConfig::profile(profile, scope)
        }
    };
    let (report, _, _) = load_report(&a.source)?;
    let verdict = evaluate_gate(&report, &config);
    print_json(&serde_json::to_value(&verdict).expect("json"));
    Ok(verdict.exit_code as u8)
}

fn model_means(report: &AuditReport) -> BTreeMap<String, f64> {
    report.models.iter().map(|m| (m.model_id.clone(), m.mean_svi)).collect()
}

pub fn ablate_temperature(a: AblateArgs) -> Result<u8, CliError> {
    let base = if a.plan.is_empty() {
        let id = a
            .plan
            .run_id
            .clone()
            .ok_or_else(|| CliError::Config("--plan, --providers or --run-id is required".into()))?;
        log_file::read_plan(&a.out, &id)?.plan
    } else {
        build_plan(&a.plan)?
    };
    let (plan, dropped) = temperature_ablation_plan(&base);
    if plan.models.is_empty() {
        print_json(
            &json!({ "run_id": plan.run_id, "dropped_models": dropped, "note": "no model accepts a temperature" }),
        );
        return Ok(EXIT_OK);
    }
    let providers = connect_plan(&plan)?;
    let summary = runner::execute(&plan, &providers, &a.out)?;

    let ablated = report_for_run(&load_run(&a.out, &plan.run_id)?, 0, 0.8)?.0;
    let mut out = json!({
        "run_id": plan.run_id,
        "dropped_models": dropped,
        "summary": summary,
        "mean_svi_t0": ablated.global.mean_svi,
    });
    if log_file::log_path(&a.out, &base.run_id).exists() {
        let base_report = report_for_run(&load_run(&a.out, &base.run_id)?, 0, 0.8)?.0;
        let (b, t) = (model_means(&base_report), model_means(&ablated));
        let paired: Vec<(f64, f64)> = b.iter().filter_map(|(id, v)| t.get(id).map(|w| (*v, *w))).collect();
        let (xs, ys): (Vec<f64>, Vec<f64>) = paired.iter().copied().unzip();
        out["mean_svi_base"] = json!(base_report.global.mean_svi);
        out["paired_models"] = json!(paired.len());
        out["wilcoxon"] = match wilcoxon_signed_rank(&xs, &ys) {
            Ok(w) => serde_json::to_value(w).expect("json"),
            Err(e) => json!({ "error": e.to_string() }),
        };
    } else {
        out["note"] = json!(format!("no log for base run {}; paired comparison skipped", base.run_id));
    }
    print_json(&out);
    Ok(EXIT_OK)
}

fn simulation_plan(a: &SimulateArgs, audit: usize) -> RunPlan {
    let models = (0..a.models)
        .map(|i| {
            ModelSpec::mock(
                &format!("fragile-{i}"),
                Origin::Oss,
                MockSettings {
                    svi_target: Some(a.svi_target),
                    lpn_rates: None,
                    compliance: a.compliance,
                    seed: i as u64,
                    coupling: DrawCoupling::SharedDraw,
                },
            )
        })
        .collect();
    RunPlan {
        run_id: if audit == 0 { "simulate".into() } else { format!("simulate-{audit}") },
        models,
        scenarios: default_suite(),
        policy: SamplingPolicy { n_samples: a.samples, ..SamplingPolicy::default() },
        ablation: Ablation::None,
        seed: a.seed.wrapping_add(audit as u64),
    }
}

pub fn simulate(a: SimulateArgs) -> Result<u8, CliError> {
    if !(0.0..=1.0).contains(&a.svi_target) {
        return Err(CliError::Config(format!("--svi-target {} outside [0, 1]", a.svi_target)));
    }
    if a.audits == 0 || a.models == 0 {
        return Err(CliError::Config("--audits and --models must be at least 1".into()));
    }
    let mut estimates = Vec::new();
    let mut significant = Vec::new();
    for audit in 0..a.audits {
        let plan = simulation_plan(&a, audit);
        let providers = connect_plan(&plan)?;
        let records = match (&a.out, audit) {
            (Some(dir), 0) => {
                runner::execute(&plan, &providers, dir)?;
                load_run(dir, &plan.run_id)?.records
            }
            _ => run_in_memory(&plan, &providers)?,
        };
        let agg = aggregate(&records, a.samples as usize, FDR_Q);
        if !agg.cells.is_empty() {
            estimates.push(mean(&agg.cells.iter().map(|c| c.svi).collect::<Vec<_>>()));
        }
        if let Some(s) = agg.significant_share() {
            significant.push(s);
        }
    }
    print_json(&json!({
        "svi_target": a.svi_target,
        "audits": a.audits,
        "models_per_audit": a.models,
        "samples": a.samples,
        "mean_estimated_svi": (!estimates.is_empty()).then(|| mean(&estimates)),
        "mean_significant_cell_share": (!significant.is_empty()).then(|| mean(&significant)),
        "log": a.out.as_ref().map(|d| log_file::log_path(d, "simulate")),
    }));
    Ok(EXIT_OK)
}
