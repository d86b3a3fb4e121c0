//! Executing plans against providers.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::thread;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::log_file::{self, read_log, RunLog};
use super::{prompt_hash, RunError, RunPlan, RunRecord, Task};
use crate::ingest::{parse_response, FailureReason, ParseOutcome};
use crate::lpn::lpn;
use crate::providers::{self, sample_decision, ModelSpec, Provider, ProviderError};
use crate::scenario::{render_prompt, Frame, PromptInstance};

pub type ProviderMap = BTreeMap<String, Arc<dyn Provider>>;

/// Mock seeds are mixed with the plan seed and model id, so two mock
/// models with identical settings still draw different streams.
fn mixed_seed(plan_seed: u64, mock_seed: u64, model_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(plan_seed.to_le_bytes());
    h.update(mock_seed.to_le_bytes());
    h.update(model_id.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Resolves a provider for every model in the plan.
pub fn connect_plan(plan: &RunPlan) -> Result<ProviderMap, ProviderError> {
    let mut out: ProviderMap = BTreeMap::new();
    for spec in &plan.models {
        let provider: Arc<dyn Provider> = if spec.is_mock() {
            let mut spec: ModelSpec = spec.clone();
            if let Some(m) = spec.mock.as_mut() {
                m.seed = mixed_seed(plan.seed, m.seed, &spec.model_id);
            }
            Arc::from(providers::connect(&spec, &plan.policy)?)
        } else {
            Arc::from(providers::connect(spec, &plan.policy)?)
        };
        out.insert(spec.model_id.clone(), provider);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelTally {
    pub attempts: u64,
    pub valid: u64,
    pub invalid: u64,
    /// Invalid because no response arrived after retries.
    pub sample_failures: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub per_model: BTreeMap<String, ModelTally>,
}

impl RunSummary {
    pub fn from_records<'a>(run_id: &str, records: impl IntoIterator<Item = &'a RunRecord>) -> Self {
        let mut s = RunSummary { run_id: run_id.to_string(), per_model: BTreeMap::new() };
        for r in records {
            s.add(r);
        }
        s
    }

    fn add(&mut self, r: &RunRecord) {
        let t = self.per_model.entry(r.model_id.clone()).or_default();
        t.attempts += 1;
        if r.parse.is_valid() {
            t.valid += 1;
        } else {
            t.invalid += 1;
            if matches!(r.parse.failure_reason, Some(FailureReason::SampleFailed(_))) {
                t.sample_failures += 1;
            }
        }
    }

    pub fn total_attempts(&self) -> u64 {
        self.per_model.values().map(|t| t.attempts).sum()
    }
}

struct Prepared {
    prompts: HashMap<(usize, Frame), (PromptInstance, String)>,
}

impl Prepared {
    fn new(plan: &RunPlan) -> Result<Self, RunError> {
        let mut prompts = HashMap::new();
        for (i, s) in plan.scenarios.iter().enumerate() {
            for frame in Frame::ALL {
                let p = render_prompt(s, frame)?;
                let hash = prompt_hash(&p.full_text);
                prompts.insert((i, frame), (p, hash));
            }
        }
        Ok(Prepared { prompts })
    }
}

/// Samples one task. `Err` only for run-fatal provider errors.
fn run_task(
    plan: &RunPlan,
    prepared: &Prepared,
    provider: &dyn Provider,
    task: Task,
) -> Result<RunRecord, ProviderError> {
    let spec = &plan.models[task.model];
    let (prompt, hash) = &prepared.prompts[&(task.scenario, task.frame)];
    let (raw, parse) = match sample_decision(spec, provider, prompt, &plan.policy, task.draw) {
        Ok(raw) => {
            let parse = parse_response(&raw);
            (raw, parse)
        }
        Err(e) if !e.is_run_fatal() => {
            (String::new(), ParseOutcome::invalid(FailureReason::SampleFailed(e.to_string()), ""))
        }
        Err(e) => return Err(e),
    };
    Ok(RunRecord {
        run_id: plan.run_id.clone(),
        model_id: spec.model_id.clone(),
        scenario_id: plan.scenarios[task.scenario].id.clone(),
        frame: task.frame,
        draw_index: task.draw,
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        temperature_used: plan.policy.temperature_for(spec),
        prompt_hash: hash.clone(),
        raw_response: raw,
        lpn_action: parse.decision().map(|d| lpn(task.frame, d)),
        parse,
    })
}

fn provider_for<'a>(providers: &'a ProviderMap, spec: &ModelSpec) -> Result<&'a Arc<dyn Provider>, RunError> {
    providers.get(&spec.model_id).ok_or_else(|| RunError::Config(format!("no provider for model `{}`", spec.model_id)))
}

/// Runs every task of `plan` sequentially and returns the records in task
/// order without touching disk. Used for simulation studies.
pub fn run_in_memory(plan: &RunPlan, providers: &ProviderMap) -> Result<Vec<RunRecord>, RunError> {
    plan.validate()?;
    let prepared = Prepared::new(plan)?;
    plan.tasks()
        .into_iter()
        .map(|task| {
            let spec = &plan.models[task.model];
            let provider = provider_for(providers, spec)?;
            run_task(plan, &prepared, provider.as_ref(), task)
                .map_err(|source| RunError::Fatal { model: spec.model_id.clone(), source })
        })
        .collect()
}

/// Starts a fresh run: writes the plan sidecar and attempts every task.
pub fn execute(plan: &RunPlan, providers: &ProviderMap, dir: &Path) -> Result<RunSummary, RunError> {
    plan.validate()?;
    let existing = read_log(&log_file::log_path(dir, &plan.run_id))?;
    if !existing.records.is_empty() {
        return Err(RunError::AlreadyStarted(plan.run_id.clone()));
    }
    if log_file::plan_path(dir, &plan.run_id).exists() {
        let stored = log_file::read_plan(dir, &plan.run_id)?;
        if stored.digest != plan.digest() {
            return Err(RunError::DigestMismatch {
                run_id: plan.run_id.clone(),
                stored: stored.digest,
                current: plan.digest(),
            });
        }
    } else {
        log_file::write_plan(dir, plan)?;
    }
    execute_remainder(plan, &plan.tasks(), providers, dir)
}

#[derive(Debug)]
pub struct Resumption {
    pub plan: RunPlan,
    pub remainder: Vec<Task>,
    pub corrupted_lines: Vec<usize>,
}

/// Loads the stored plan of `run_id` and lists the tasks with no record.
/// When `expected` is given its digest must equal the stored one.
pub fn resume(dir: &Path, run_id: &str, expected: Option<&RunPlan>) -> Result<Resumption, RunError> {
    let stored = log_file::read_plan(dir, run_id)?;
    if let Some(plan) = expected {
        let current = plan.digest();
        if current != stored.digest {
            return Err(RunError::DigestMismatch { run_id: run_id.to_string(), stored: stored.digest, current });
        }
    }
    let contents = read_log(&log_file::log_path(dir, run_id))?;
    let present: BTreeSet<_> = contents.records.iter().filter(|r| r.run_id == run_id).map(|r| r.key()).collect();
    let plan = stored.plan;
    let remainder = plan.tasks().into_iter().filter(|t| !present.contains(&plan.key(t))).collect();
    Ok(Resumption { plan, remainder, corrupted_lines: contents.corrupted_lines })
}

enum Msg {
    Record(Box<RunRecord>),
    Fatal(String, ProviderError),
}

/// Attempts `tasks` with up to `concurrency_limit` in-flight calls per
/// model. Records go through a single writer and are synced as they arrive.
/// A run-fatal error stops new work; records already produced are still
/// written and the error is returned.
pub fn execute_remainder(
    plan: &RunPlan,
    tasks: &[Task],
    providers: &ProviderMap,
    dir: &Path,
) -> Result<RunSummary, RunError> {
    let prepared = Prepared::new(plan)?;
    let mut queues: BTreeMap<usize, VecDeque<Task>> = BTreeMap::new();
    for &t in tasks {
        queues.entry(t.model).or_default().push_back(t);
    }
    let mut log = RunLog::open(dir, &plan.run_id)?;
    let abort = AtomicBool::new(false);
    let mut summary = RunSummary { run_id: plan.run_id.clone(), per_model: BTreeMap::new() };
    let mut fatal: Option<RunError> = None;

    thread::scope(|scope| -> Result<(), RunError> {
        let (tx, rx) = mpsc::channel::<Msg>();
        for (model, queue) in queues {
            let spec = &plan.models[model];
            let provider = provider_for(providers, spec)?.clone();
            let workers = plan.policy.concurrency_limit.min(queue.len()).max(1);
            let queue = Arc::new(Mutex::new(queue));
            for _ in 0..workers {
                let (tx, queue, provider) = (tx.clone(), queue.clone(), provider.clone());
                let (prepared, abort) = (&prepared, &abort);
                scope.spawn(move || loop {
                    if abort.load(Ordering::SeqCst) {
                        break;
                    }
                    let Some(task) = queue.lock().expect("queue poisoned").pop_front() else {
                        break;
                    };
                    let msg = match run_task(plan, prepared, provider.as_ref(), task) {
                        Ok(r) => Msg::Record(Box::new(r)),
                        Err(e) => {
                            abort.store(true, Ordering::SeqCst);
                            Msg::Fatal(spec.model_id.clone(), e)
                        }
                    };
                    if tx.send(msg).is_err() {
                        break;
                    }
                });
            }
        }
        drop(tx);
        for msg in rx {
            match msg {
                Msg::Record(r) => {
                    if let Err(e) = log.append(&r) {
                        abort.store(true, Ordering::SeqCst);
                        fatal.get_or_insert(e);
                        continue;
                    }
                    summary.add(&r);
                }
                Msg::Fatal(model, source) => {
                    log::error!("{model}: run-fatal error, stopping: {source}");
                    fatal.get_or_insert(RunError::Fatal { model, source });
                }
            }
        }
        Ok(())
    })?;

    match fatal {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}
