use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;

use args::{Cli, Command};

pub const EXIT_OK: u8 = 0;
pub const EXIT_GATE_FAIL: u8 = 2;
pub const EXIT_RUN_FATAL: u8 = 3;
pub const EXIT_CONFIG: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    RunFatal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::RunFatal(_) => EXIT_RUN_FATAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::RunFatal(m) => write!(f, "run aborted: {m}"),
        }
    }
}

impl From<svi_core::runner::RunError> for CliError {
    fn from(e: svi_core::runner::RunError) -> Self {
        match e {
            svi_core::runner::RunError::Fatal { .. } => CliError::RunFatal(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<svi_core::report::ReportError> for CliError {
    fn from(e: svi_core::report::ReportError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<svi_core::providers::ProviderError> for CliError {
    fn from(e: svi_core::providers::ProviderError) -> Self {
        if e.is_run_fatal() && !matches!(e, svi_core::providers::ProviderError::Config(_)) {
            CliError::RunFatal(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Run(a) => commands::run(a),
        Command::Resume(a) => commands::resume(a),
        Command::Report(a) => commands::report(a),
        Command::Gate(a) => commands::gate(a),
        Command::AblateTemperature(a) => commands::ablate_temperature(a),
        Command::Simulate(a) => commands::simulate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("svi: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
