use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "svi", version, about = "Audit LLM decisions for syntactic framing fragility")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute a run plan and write its log.
    Run(RunArgs),
    /// Finish an interrupted run.
    Resume(ResumeArgs),
    /// Aggregate a run log into a report and export it.
    Report(ReportArgs),
    /// Evaluate the deployment gate. Exit status 0 = pass, 2 = fail.
    Gate(GateArgs),
    /// Re-run a plan at temperature 0 and compare with the base run.
    AblateTemperature(AblateArgs),
    /// Synthetic audits with negation-fragile mock models.
    Simulate(SimulateArgs),
}

/// Where the plan comes from, plus command-line overrides.
#[derive(Debug, Args, Default, Clone)]
pub struct PlanArgs {
    /// Plan file (TOML).
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Provider registry (TOML); overrides the plan's registry.
    #[arg(long)]
    pub providers: Option<PathBuf>,
    /// Scenario suite (TOML); overrides the plan's suite.
    #[arg(long)]
    pub scenarios: Option<PathBuf>,
    #[arg(long)]
    pub run_id: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Samples per (model, scenario, frame).
    #[arg(long)]
    pub samples: Option<u32>,
    /// A number in [0, 2] or `provider_default`.
    #[arg(long)]
    pub temperature: Option<String>,
}

impl PlanArgs {
    pub fn is_empty(&self) -> bool {
        self.plan.is_none() && self.providers.is_none()
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub plan: PlanArgs,
    /// Directory holding run logs.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ResumeArgs {
    /// Run to resume. Optional plan arguments are checked against the
    /// stored plan digest.
    #[command(flatten)]
    pub plan: PlanArgs,
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct SourceArgs {
    /// Run to report on.
    #[arg(long)]
    pub run_id: Option<String>,
    /// Directory holding run logs.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    /// Use the reference per-model SVIs instead of a run log.
    #[arg(long, conflicts_with = "run_id")]
    pub fixture: bool,
    /// Bootstrap seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Minimum compliance rate for a model to be included.
    #[arg(long, default_value_t = 0.8)]
    pub compliance_threshold: f64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Export format (`json` or `csv`). `both` writes the two.
    #[arg(long, default_value = "both")]
    pub format: String,
    /// Export directory (default: <out>/<run_id>-report).
    #[arg(long)]
    pub export_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Custom threshold; overrides the profile.
    #[arg(long)]
    pub gate_threshold: Option<f64>,
    /// autonomous (0.2) or human_in_loop (0.5).
    #[arg(long, default_value = "human_in_loop")]
    pub gate_profile: String,
    /// aggregate_svi or max_scenario_svi.
    #[arg(long, default_value = "aggregate_svi")]
    pub gate_scope: String,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Base plan; when omitted the stored plan of --run-id is used.
    #[command(flatten)]
    pub plan: PlanArgs,
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 0.65)]
    pub svi_target: f64,
    #[arg(long, default_value_t = 30)]
    pub samples: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent synthetic audits.
    #[arg(long, default_value_t = 1)]
    pub audits: usize,
    /// Mock models per audit.
    #[arg(long, default_value_t = 1)]
    pub models: usize,
    /// Share of well-formed mock responses.
    #[arg(long, default_value_t = 1.0)]
    pub compliance: f64,
    /// Also write the first audit as a run log here (run id `simulate`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}
