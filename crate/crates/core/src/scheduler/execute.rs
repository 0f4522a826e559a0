use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::sync::mpsc;
use std::thread;

use serde::{Deserialize, Serialize};

use super::manifest::now_ms;
use super::{compose_task_io, fingerprint_hex, Manifest, ManifestRecord, RunPlan, SchedulerError, TaskStatus};
use super::{MANIFEST_FILE, PLAN_FILE};
use crate::contract::{invoke_stage, ContractError, InvokeOptions, StageKind, StageOutcome};
use crate::data::{split_file_name, BenchmarkIndex, DirLock, EntityKind, Partition, BENCHMARK_INDEX};

#[derive(Debug, Clone, Default)]
pub struct ExecuteOptions {
    /// Continue a run whose manifest already exists.
    pub resume: bool,
    pub invoke: InvokeOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFailure {
    pub task_id: String,
    pub error_class: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// Stage processes launched by this call.
    pub invoked: usize,
    /// Tasks already done with an unchanged fingerprint.
    pub skipped: usize,
    pub done: usize,
    pub failed: Vec<TaskFailure>,
    pub max_concurrent: usize,
}

impl RunResult {
    pub fn success(&self) -> bool {
        self.failed.is_empty()
    }
}

fn file_stamp(path: &Path) -> String {
    match fs::metadata(path) {
        Ok(m) => {
            let mtime = m
                .modified()
                .ok()
                .and_then(|t| t.duration_since(std::time::UNIX_EPOCH).ok())
                .map(|d| d.as_nanos())
                .unwrap_or(0);
            format!("{}:{}:{mtime}", path.display(), m.len())
        }
        Err(_) => format!("{}:missing", path.display()),
    }
}

/// Fingerprint every task. Inputs are the task id, model spec, stage flags,
/// config file bytes and dependency fingerprints; preprocess adds the
/// source split files and the size and mtime of every data file of the
/// source and target datasets.
fn fingerprints(plan: &RunPlan, rundir: &Path) -> Result<Vec<String>, SchedulerError> {
    let index = BenchmarkIndex::load(&plan.benchmark_root)?;
    let bench_json = fs::read(plan.benchmark_root.join(BENCHMARK_INDEX)).unwrap_or_default();
    let pos: HashMap<&str, usize> = plan.tasks.iter().enumerate().map(|(i, t)| (t.id.as_str(), i)).collect();
    let mut memo: Vec<Option<String>> = vec![None; plan.tasks.len()];

    fn visit(
        i: usize,
        plan: &RunPlan,
        rundir: &Path,
        index: &BenchmarkIndex,
        bench_json: &[u8],
        pos: &HashMap<&str, usize>,
        memo: &mut Vec<Option<String>>,
    ) -> Result<String, SchedulerError> {
        if let Some(fp) = &memo[i] {
            return Ok(fp.clone());
        }
        let task = &plan.tasks[i];
        let model = &plan.models[task.model];
        let mut parts: Vec<Vec<u8>> = vec![
            task.id.clone().into_bytes(),
            serde_json::to_vec(model).expect("spec serializes"),
        ];
        for (k, v) in compose_task_io(plan, task, rundir) {
            parts.push(format!("--{k}={v}").into_bytes());
        }
        if let Some(c) = &model.config {
            parts.push(fs::read(c).map_err(SchedulerError::io(c))?);
        }
        if task.stage == StageKind::Preprocess {
            parts.push(bench_json.to_vec());
            let split_dir = index.split_dir(&task.source);
            for p in Partition::ALL {
                let f = split_dir.join(split_file_name(&task.source, task.split, p));
                parts.push(fs::read(&f).map_err(SchedulerError::io(&f))?);
            }
            for ds in [&task.source, &task.target] {
                let d = index.dataset(ds)?;
                parts.push(file_stamp(&index.root.join(&d.response_path)).into_bytes());
                for e in [EntityKind::Cell, EntityKind::Drug] {
                    for rel in d.feature_paths(e).values() {
                        parts.push(file_stamp(&index.root.join(rel)).into_bytes());
                    }
                }
            }
        }
        for dep in &task.deps {
            let j = *pos
                .get(dep.as_str())
                .ok_or_else(|| SchedulerError::InvalidPlan(format!("{} depends on unknown task {dep}", task.id)))?;
            parts.push(visit(j, plan, rundir, index, bench_json, pos, memo)?.into_bytes());
        }
        let fp = fingerprint_hex(&parts);
        memo[i] = Some(fp.clone());
        Ok(fp)
    }

    (0..plan.tasks.len())
        .map(|i| visit(i, plan, rundir, &index, &bench_json, &pos, &mut memo))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Waiting,
    Running,
    Done,
    Failed,
}

fn record(id: &str, status: TaskStatus, fp: &str) -> ManifestRecord {
    ManifestRecord {
        task_id: id.to_string(),
        status,
        ts_ms: now_ms(),
        fingerprint: fp.to_string(),
        artifacts: vec![],
        error_class: None,
        message: None,
    }
}

/// Run every task of `plan` whose latest manifest record is not `done` with
/// its current fingerprint. Ready tasks are launched in plan order, at most
/// `plan.slots` at a time. A failed task marks its transitive dependents
/// failed without running them; other branches continue. Only manifest and
/// run-directory I/O errors fail the call itself.
pub fn execute(plan: &RunPlan, rundir: &Path, opts: &ExecuteOptions) -> Result<RunResult, SchedulerError> {
    fs::create_dir_all(rundir).map_err(SchedulerError::io(rundir))?;
    let mpath = rundir.join(MANIFEST_FILE);
    if mpath.exists() && !opts.resume {
        return Err(SchedulerError::ManifestExists(mpath));
    }
    let _lock = DirLock::acquire(rundir)?;
    if opts.resume && rundir.join(PLAN_FILE).exists() {
        let previous = RunPlan::load(rundir)?;
        if previous.tasks.iter().map(|t| &t.id).ne(plan.tasks.iter().map(|t| &t.id)) {
            return Err(SchedulerError::InvalidPlan(
                "resumed plan differs from the one recorded in the run directory".into(),
            ));
        }
    }
    plan.save(rundir)?;
    let fps = fingerprints(plan, rundir)?;
    let mut manifest = Manifest::open(&mpath)?;

    let n = plan.tasks.len();
    let pos: HashMap<&str, usize> = plan.tasks.iter().enumerate().map(|(i, t)| (t.id.as_str(), i)).collect();
    let mut dependents = vec![Vec::new(); n];
    for (i, t) in plan.tasks.iter().enumerate() {
        for d in &t.deps {
            dependents[pos[d.as_str()]].push(i);
        }
    }
    let mut state = vec![State::Waiting; n];
    let mut result = RunResult::default();
    for (i, t) in plan.tasks.iter().enumerate() {
        if manifest.is_done(&t.id, &fps[i]) {
            state[i] = State::Done;
            result.skipped += 1;
        }
    }
    let mut remaining: Vec<usize> = plan
        .tasks
        .iter()
        .map(|t| t.deps.iter().filter(|d| state[pos[d.as_str()]] != State::Done).count())
        .collect();
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| state[i] == State::Waiting && remaining[i] == 0).collect();
    for (i, t) in plan.tasks.iter().enumerate() {
        if state[i] == State::Waiting {
            manifest.append(record(&t.id, TaskStatus::Pending, &fps[i]))?;
        }
    }

    let (tx, rx) = mpsc::channel::<(usize, Result<StageOutcome, ContractError>)>();
    let mut fatal: Option<SchedulerError> = None;
    thread::scope(|scope| {
        let mut running = 0usize;
        loop {
            while fatal.is_none() && running < plan.slots {
                let Some(i) = ready.pop_first() else { break };
                let task = &plan.tasks[i];
                if let Err(e) = manifest.append(record(&task.id, TaskStatus::Running, &fps[i])) {
                    fatal = Some(e);
                    break;
                }
                let workdir = rundir.join(&task.workdir);
                if workdir.exists() {
                    if let Err(e) = fs::remove_dir_all(&workdir) {
                        fatal = Some(SchedulerError::io(&workdir)(e));
                        break;
                    }
                }
                state[i] = State::Running;
                let spec = plan.models[task.model].clone();
                let flags = compose_task_io(plan, task, rundir);
                let mut iopts = opts.invoke.clone();
                iopts.env.insert("CSABENCH_TASK_ID".into(), task.id.clone());
                let stage = task.stage;
                let tx = tx.clone();
                scope.spawn(move || {
                    let out = invoke_stage(&spec, stage, &flags, &workdir, &iopts);
                    let _ = tx.send((i, out));
                });
                running += 1;
                result.invoked += 1;
                result.max_concurrent = result.max_concurrent.max(running);
            }
            if running == 0 {
                break;
            }
            let (i, outcome) = rx.recv().expect("a worker is running");
            running -= 1;
            let task = &plan.tasks[i];
            let appended = match outcome {
                Ok(out) => {
                    state[i] = State::Done;
                    result.done += 1;
                    for &j in &dependents[i] {
                        remaining[j] -= 1;
                        if remaining[j] == 0 && state[j] == State::Waiting {
                            ready.insert(j);
                        }
                    }
                    let mut rec = record(&task.id, TaskStatus::Done, &fps[i]);
                    rec.artifacts = out
                        .artifacts
                        .iter()
                        .map(|p| p.strip_prefix(rundir).unwrap_or(p).to_path_buf())
                        .collect();
                    manifest.append(rec)
                }
                Err(e) => fail(plan, i, &e, &fps, &dependents, &mut state, &mut ready, &mut manifest, &mut result),
            };
            if let Err(e) = appended {
                fatal.get_or_insert(e);
            }
        }
    });
    match fatal {
        Some(e) => Err(e),
        None => Ok(result),
    }
}

#[allow(clippy::too_many_arguments)]
fn fail(
    plan: &RunPlan,
    i: usize,
    err: &ContractError,
    fps: &[String],
    dependents: &[Vec<usize>],
    state: &mut [State],
    ready: &mut BTreeSet<usize>,
    manifest: &mut Manifest,
    result: &mut RunResult,
) -> Result<(), SchedulerError> {
    let task = &plan.tasks[i];
    state[i] = State::Failed;
    let mut message = err.to_string();
    if let Some(d) = err.diagnostics().filter(|d| !d.is_empty()) {
        message.push('\n');
        message.push_str(d);
    }
    let mut rec = record(&task.id, TaskStatus::Failed, &fps[i]);
    rec.error_class = Some(err.class().to_string());
    rec.message = Some(message.clone());
    manifest.append(rec)?;
    result.failed.push(TaskFailure {
        task_id: task.id.clone(),
        error_class: err.class().to_string(),
        message,
    });

    let mut stack: Vec<usize> = dependents[i].clone();
    while let Some(j) = stack.pop() {
        if state[j] != State::Waiting {
            continue;
        }
        state[j] = State::Failed;
        ready.remove(&j);
        let mut rec = record(&plan.tasks[j].id, TaskStatus::Failed, &fps[j]);
        rec.error_class = Some("failed-upstream".into());
        rec.message = Some(format!("dependency {} failed", task.id));
        manifest.append(rec)?;
        result.failed.push(TaskFailure {
            task_id: plan.tasks[j].id.clone(),
            error_class: "failed-upstream".into(),
            message: format!("dependency {} failed", task.id),
        });
        stack.extend(&dependents[j]);
    }
    Ok(())
}
