//! Append-only JSONL run log and its plan sidecar.
//!
//! `{run_id}.jsonl` holds one [`RunRecord`] per line. `{run_id}.plan.json`
//! holds the plan and its digest and is written once, before the first
//! record.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{RunError, RunPlan, RunRecord};

pub fn log_path(dir: &Path, run_id: &str) -> PathBuf {
    dir.join(format!("{run_id}.jsonl"))
}

pub fn plan_path(dir: &Path, run_id: &str) -> PathBuf {
    dir.join(format!("{run_id}.plan.json"))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PlanSidecar {
    pub digest: String,
    pub plan: RunPlan,
}

pub fn write_plan(dir: &Path, plan: &RunPlan) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    let path = plan_path(dir, &plan.run_id);
    let sidecar = PlanSidecar { digest: plan.digest(), plan: plan.clone() };
    let text = serde_json::to_string_pretty(&sidecar).expect("plan serializes");
    fs::write(&path, text + "\n").map_err(|e| RunError::io(&path, e))
}

pub fn read_plan(dir: &Path, run_id: &str) -> Result<PlanSidecar, RunError> {
    let path = plan_path(dir, run_id);
    let text = fs::read_to_string(&path).map_err(|e| RunError::io(&path, e))?;
    let sidecar: PlanSidecar =
        serde_json::from_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    let recomputed = sidecar.plan.digest();
    if recomputed != sidecar.digest {
        return Err(RunError::DigestMismatch {
            run_id: run_id.to_string(),
            stored: sidecar.digest,
            current: recomputed,
        });
    }
    Ok(sidecar)
}

/// Single writer for a run log.
pub struct RunLog {
    path: PathBuf,
    file: File,
}

impl RunLog {
    /// Opens for appending. A trailing partial line left by a crash is
    /// terminated so the next record starts on its own line.
    pub fn open(dir: &Path, run_id: &str) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
        let path = log_path(dir, run_id);
        let mut file =
            OpenOptions::new().create(true).read(true).append(true).open(&path).map_err(|e| RunError::io(&path, e))?;
        let len = file.metadata().map_err(|e| RunError::io(&path, e))?.len();
        if len > 0 {
            let mut last = [0u8; 1];
            file.seek(SeekFrom::Start(len - 1)).map_err(|e| RunError::io(&path, e))?;
            file.read_exact(&mut last).map_err(|e| RunError::io(&path, e))?;
            if last[0] != b'\n' {
                file.write_all(b"\n").map_err(|e| RunError::io(&path, e))?;
            }
        }
        Ok(RunLog { path, file })
    }

    /// Writes one record and syncs it to disk. The raw completion is stored
    /// once, in `raw_response`.
    pub fn append(&mut self, record: &RunRecord) -> Result<(), RunError> {
        let mut stored = record.clone();
        stored.parse.raw_text.clear();
        let mut line = serde_json::to_string(&stored).expect("record serializes");
        line.push('\n');
        self.file.write_all(line.as_bytes()).map_err(|e| RunError::io(&self.path, e))?;
        self.file.sync_data().map_err(|e| RunError::io(&self.path, e))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

#[derive(Debug, Default)]
pub struct LogContents {
    pub records: Vec<RunRecord>,
    /// 1-based line numbers that failed to parse.
    pub corrupted_lines: Vec<usize>,
}

/// Reads every parseable record. Unparseable lines are skipped with a
/// warning. A missing file reads as empty.
pub fn read_log(path: &Path) -> Result<LogContents, RunError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(LogContents::default()),
        Err(e) => return Err(RunError::io(path, e)),
    };
    let mut out = LogContents::default();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| RunError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RunRecord>(&line) {
            Ok(mut rec) => {
                rec.parse.raw_text = rec.raw_response.clone();
                out.records.push(rec);
            }
            Err(e) => {
                log::warn!("{}:{}: skipping corrupted record ({e})", path.display(), i + 1);
                out.corrupted_lines.push(i + 1);
            }
        }
    }
    Ok(out)
}
