use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn svi(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svi"))
        .args(args)
        .current_dir(cwd)
        .env_remove("RUST_LOG")
        .output()
        .expect("spawn svi")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn write_registry(dir: &Path) -> PathBuf {
    let path = dir.join("providers.toml");
    std::fs::write(
        &path,
        r#"
[[model]]
model_id = "steady"
origin = "US_commercial"
tier = "LARGE"
endpoint = "builtin-mock"
[model.mock]
lpn_rates = [0.4, 0.4, 0.4, 0.42]
seed = 1

[[model]]
model_id = "fragile"
origin = "OSS"
tier = "TINY"
endpoint = "builtin-mock"
[model.mock]
svi_target = 0.7
seed = 2
"#,
    )
    .unwrap();
    path
}

#[test]
fn fixture_gate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let strict = svi(&["gate", "--fixture", "--gate-profile", "autonomous"], dir.path());
    assert_eq!(code(&strict), 2);
    let v = stdout_json(&strict);
    assert_eq!(v["pass"], false);
    assert_eq!(v["threshold"], 0.2);

    let lenient = svi(&["gate", "--fixture", "--gate-threshold", "0.9"], dir.path());
    assert_eq!(code(&lenient), 0);
    assert_eq!(stdout_json(&lenient)["pass"], true);
}

#[test]
fn configuration_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&svi(&["gate", "--fixture", "--gate-threshold", "1.5"], dir.path())), 4);
    assert_eq!(code(&svi(&["gate", "--fixture", "--gate-profile", "reckless"], dir.path())), 4);
    assert_eq!(code(&svi(&["run", "--out", "runs"], dir.path())), 4);
    assert_eq!(code(&svi(&["report", "--run-id", "missing"], dir.path())), 4);

    let reg = dir.path().join("hosted.toml");
    std::fs::write(
        &reg,
        "[[model]]\nmodel_id = \"h\"\norigin = \"OSS\"\ntier = \"SMALL\"\nendpoint = \"https://127.0.0.1:9/v1\"\nauth_env = \"SVI_TEST_UNSET_KEY\"\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_svi"))
        .args(["run", "--providers", reg.to_str().unwrap(), "--samples", "1"])
        .current_dir(dir.path())
        .env_remove("SVI_TEST_UNSET_KEY")
        .output()
        .unwrap();
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("SVI_TEST_UNSET_KEY"));
}

#[test]
fn run_report_gate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let reg = write_registry(dir.path());
    let reg = reg.to_str().unwrap();

    let run = svi(&["run", "--providers", reg, "--run-id", "r1", "--samples", "10", "--seed", "5"], dir.path());
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let summary = stdout_json(&run);
    assert_eq!(summary["summary"]["per_model"]["fragile"]["attempts"], 14 * 4 * 10);

    let again = svi(&["run", "--providers", reg, "--run-id", "r1", "--samples", "10", "--seed", "5"], dir.path());
    assert_eq!(code(&again), 4);

    let report = svi(&["report", "--run-id", "r1", "--export-dir", "out"], dir.path());
    assert_eq!(code(&report), 0, "{}", String::from_utf8_lossy(&report.stderr));
    let ranking = &stdout_json(&report)["report"]["ranking"];
    assert_eq!(ranking[0][1], "fragile");
    for f in ["report.json", "heatmap.csv", "ranking.csv", "framing_bars.csv", "scenario_ci.csv", "cell_tests.json"] {
        assert!(dir.path().join("out").join(f).exists(), "missing {f}");
    }

    let pass = svi(&["gate", "--run-id", "r1", "--gate-profile", "human_in_loop"], dir.path());
    assert_eq!(code(&pass), 0);
    let fail =
        svi(&["gate", "--run-id", "r1", "--gate-scope", "max_scenario_svi", "--gate-threshold", "0.3"], dir.path());
    assert_eq!(code(&fail), 2);
    assert!(!stdout_json(&fail)["offending_scenarios"].as_array().unwrap().is_empty());
}

#[test]
fn resume_completes_a_truncated_log() {
    let dir = tempfile::tempdir().unwrap();
    let reg = write_registry(dir.path());
    let reg = reg.to_str().unwrap();
    let args = ["run", "--providers", reg, "--run-id", "r2", "--samples", "3"];
    assert_eq!(code(&svi(&args, dir.path())), 0);

    let log = dir.path().join("runs/r2.jsonl");
    let full = std::fs::read_to_string(&log).unwrap();
    let lines: Vec<&str> = full.lines().collect();
    let keep = lines.len() / 3;
    let mut torn = lines[..keep].join("\n");
    torn.push('\n');
    torn.push_str(&lines[keep][..lines[keep].len() / 2]);
    std::fs::write(&log, torn).unwrap();

    let resumed = svi(&["resume", "--run-id", "r2"], dir.path());
    assert_eq!(code(&resumed), 0, "{}", String::from_utf8_lossy(&resumed.stderr));
    assert_eq!(stdout_json(&resumed)["resumed_tasks"], (lines.len() - keep) as u64);

    let mismatch = svi(&["resume", "--providers", reg, "--run-id", "r2", "--samples", "4"], dir.path());
    assert_eq!(code(&mismatch), 4);
}

#[test]
fn simulate_recovers_target() {
    let dir = tempfile::tempdir().unwrap();
    let out = svi(&["simulate", "--svi-target", "0.6", "--audits", "3", "--seed", "11"], dir.path());
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    let est = v["mean_estimated_svi"].as_f64().unwrap();
    assert!((est - 0.6).abs() < 0.05, "estimate {est}");
    assert_eq!(v["mean_significant_cell_share"], 1.0);
}

#[test]
fn temperature_ablation_pairs_with_base_run() {
    let dir = tempfile::tempdir().unwrap();
    let reg = write_registry(dir.path());
    let reg = reg.to_str().unwrap();
    assert_eq!(code(&svi(&["run", "--providers", reg, "--run-id", "base", "--samples", "5"], dir.path())), 0);
    let out = svi(&["ablate-temperature", "--run-id", "base"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["run_id"], "base-t0");
    assert_eq!(v["paired_models"], 2);
    assert!(dir.path().join("runs/base-t0.jsonl").exists());
}
