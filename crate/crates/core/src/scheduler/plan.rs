use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::SchedulerError;
use crate::contract::{ModelSpec, StageKind, MODEL_DIR};
use crate::data::{split_file_name, BenchmarkIndex, Partition};

pub const PLAN_FILE: &str = "plan.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineTask {
    pub id: String,
    /// Index into `RunPlan::models`.
    pub model: usize,
    pub stage: StageKind,
    pub source: String,
    pub target: String,
    pub split: usize,
    pub deps: Vec<String>,
    /// Relative to the run directory.
    pub workdir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub benchmark_root: PathBuf,
    pub models: Vec<ModelSpec>,
    pub datasets: Vec<String>,
    pub n_splits: usize,
    pub slots: usize,
    /// Train once per (source, split) and share the model across targets.
    pub reuse: bool,
    pub tasks: Vec<PipelineTask>,
}

fn task_dir(model: &str, s: &str, t: &str, n: usize, stage: StageKind) -> PathBuf {
    PathBuf::from(model).join(format!("{s}-{t}")).join(format!("split_{n}")).join(stage.as_str())
}

fn task_id(dir: &Path) -> String {
    dir.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

impl RunPlan {
    pub fn task(&self, id: &str) -> Option<&PipelineTask> {
        self.tasks.iter().find(|t| t.id == id)
    }

    pub fn save(&self, rundir: &Path) -> Result<(), SchedulerError> {
        let path = rundir.join(PLAN_FILE);
        let text = serde_json::to_string_pretty(self).expect("plan serializes");
        fs::write(&path, text + "\n").map_err(SchedulerError::io(&path))
    }

    pub fn load(rundir: &Path) -> Result<Self, SchedulerError> {
        let path = rundir.join(PLAN_FILE);
        let text = fs::read_to_string(&path).map_err(SchedulerError::io(&path))?;
        serde_json::from_str(&text).map_err(|e| SchedulerError::InvalidPlan(format!("{}: {e}", path.display())))
    }

    /// Workdir of the infer task for `(model, s, t, n)`, relative to the run
    /// directory.
    pub fn infer_dir(&self, model: &str, s: &str, t: &str, n: usize) -> PathBuf {
        task_dir(model, s, t, n, StageKind::Infer)
    }
}

/// Enumerate every task for `models` over all datasets of `index`. Tasks are
/// ordered by model, source, target, split, stage. Each (s, t, n) gets a
/// preprocess and an infer task; training happens once per (s, n) under the
/// `s-s` directory, or once per (s, t, n) when `reuse` is off.
pub fn build_plan(
    index: &BenchmarkIndex,
    models: Vec<ModelSpec>,
    n_splits: usize,
    slots: usize,
    reuse: bool,
) -> Result<RunPlan, SchedulerError> {
    if n_splits == 0 || slots == 0 {
        return Err(SchedulerError::InvalidPlan("n_splits and slots must be positive".into()));
    }
    let mut names = HashSet::new();
    for m in &models {
        m.validate()?;
        if !names.insert(m.name.as_str()) {
            return Err(SchedulerError::DuplicateModel(m.name.clone()));
        }
    }
    let datasets = index.names();
    if datasets.is_empty() {
        return Err(SchedulerError::InvalidPlan("benchmark has no datasets".into()));
    }
    for d in &datasets {
        let dir = index.split_dir(d);
        for n in 0..n_splits {
            if !Partition::ALL.iter().all(|&p| dir.join(split_file_name(d, n, p)).is_file()) {
                return Err(SchedulerError::MissingSplits {
                    dataset: d.clone(),
                    split: n,
                    dir,
                });
            }
        }
    }

    let mut tasks = Vec::new();
    for (mi, m) in models.iter().enumerate() {
        for s in &datasets {
            for t in &datasets {
                for n in 0..n_splits {
                    let mk = |stage, deps: Vec<String>| {
                        let workdir = task_dir(&m.name, s, t, n, stage);
                        PipelineTask {
                            id: task_id(&workdir),
                            model: mi,
                            stage,
                            source: s.clone(),
                            target: t.clone(),
                            split: n,
                            deps,
                            workdir,
                        }
                    };
                    let pre = mk(StageKind::Preprocess, vec![]);
                    let train_id = if reuse {
                        task_id(&task_dir(&m.name, s, s, n, StageKind::Train))
                    } else {
                        task_id(&task_dir(&m.name, s, t, n, StageKind::Train))
                    };
                    let train_pre = if reuse {
                        task_id(&task_dir(&m.name, s, s, n, StageKind::Preprocess))
                    } else {
                        pre.id.clone()
                    };
                    let infer = mk(StageKind::Infer, vec![train_id, pre.id.clone()]);
                    let train = (!reuse || s == t).then(|| mk(StageKind::Train, vec![train_pre]));
                    tasks.push(pre);
                    tasks.extend(train);
                    tasks.push(infer);
                }
            }
        }
    }
    Ok(RunPlan {
        benchmark_root: index.root.clone(),
        models,
        datasets,
        n_splits,
        slots,
        reuse,
        tasks,
    })
}

fn push(flags: &mut Vec<(String, String)>, key: &str, value: impl AsRef<Path>) {
    flags.push((key.to_string(), value.as_ref().to_string_lossy().into_owned()));
}

/// Canonical stage flags for `task`, with paths under `rundir`.
///
/// Preprocess reads the source split's train and validation rows; its test
/// rows are the source split's test rows when source equals target and the
/// whole target dataset otherwise (the stage implements that rule from the
/// flags given here). Train reads the preprocess output it depends on.
/// Infer reads the trained model and the test partition of its (s, t, n)
/// preprocess task.
pub fn compose_task_io(plan: &RunPlan, task: &PipelineTask, rundir: &Path) -> Vec<(String, String)> {
    let model = &plan.models[task.model];
    let dir = |id: &str| rundir.join(&plan.task(id).expect("dependency is in the plan").workdir);
    let out = rundir.join(&task.workdir);
    let mut f = Vec::new();
    match task.stage {
        StageKind::Preprocess => {
            push(&mut f, "input_dir", &plan.benchmark_root);
            push(&mut f, "output_dir", &out);
            push(&mut f, "benchmark_root", &plan.benchmark_root);
            push(&mut f, "source_dataset", &task.source);
            push(&mut f, "target_dataset", &task.target);
            push(&mut f, "split_index", task.split.to_string());
            push(&mut f, "split_dir", plan.benchmark_root.join(&task.source).join("splits"));
            if !model.features.cell.is_empty() {
                push(&mut f, "cell_features", model.features.cell.join(","));
            }
            if !model.features.drug.is_empty() {
                push(&mut f, "drug_features", model.features.drug.join(","));
            }
            if let Some(s) = &model.supplementary_dir {
                push(&mut f, "supplementary_dir", s);
            }
        }
        StageKind::Train => {
            push(&mut f, "input_dir", dir(&task.deps[0]));
            push(&mut f, "output_dir", &out);
        }
        StageKind::Infer => {
            let (train, pre) = (dir(&task.deps[0]), dir(&task.deps[1]));
            push(&mut f, "input_dir", &pre);
            push(&mut f, "output_dir", &out);
            push(&mut f, "model_dir", train.join(MODEL_DIR));
            push(&mut f, "test_data_dir", pre.join("test_data"));
        }
    }
    if let Some(c) = &model.config {
        push(&mut f, "config", c);
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_splits, write_split_files, DatasetDescriptor};

    fn bench(dir: &Path, d: usize, n_splits: usize) -> BenchmarkIndex {
        let names: Vec<String> = (0..d).map(|k| format!("D{k}")).collect();
        let descs = names.iter().map(|n| DatasetDescriptor::standard(n, &[], &[], 30)).collect();
        let idx = BenchmarkIndex::new(dir, descs).unwrap();
        for n in &names {
            let splits = generate_splits(30, n_splits.max(3), 1).unwrap();
            write_split_files(&splits[..n_splits], n, idx.split_dir(n)).unwrap();
        }
        idx
    }

    fn model() -> ModelSpec {
        ModelSpec::builtin("baseline-ridge", Path::new("/bin/csabench")).unwrap()
    }

    fn count(plan: &RunPlan, stage: StageKind, cross: Option<bool>) -> usize {
        plan.tasks
            .iter()
            .filter(|t| t.stage == stage && cross.is_none_or(|c| (t.source != t.target) == c))
            .count()
    }

    #[test]
    fn five_datasets_ten_splits() {
        let dir = tempfile::tempdir().unwrap();
        let plan = build_plan(&bench(dir.path(), 5, 10), vec![model()], 10, 4, true).unwrap();
        assert_eq!(count(&plan, StageKind::Preprocess, Some(false)), 50);
        assert_eq!(count(&plan, StageKind::Preprocess, Some(true)), 200);
        assert_eq!(count(&plan, StageKind::Train, None), 50);
        assert_eq!(count(&plan, StageKind::Infer, None), 250);
        assert_eq!(plan.tasks.len(), 550);

        let strict = build_plan(&bench(dir.path(), 5, 10), vec![model()], 10, 4, false).unwrap();
        assert_eq!(count(&strict, StageKind::Train, None), 250);
    }

    #[test]
    fn single_cell_grid_and_dependencies() {
        let dir = tempfile::tempdir().unwrap();
        let plan = build_plan(&bench(dir.path(), 1, 1), vec![model()], 1, 1, true).unwrap();
        let ids: Vec<&str> = plan.tasks.iter().map(|t| t.id.as_str()).collect();
        assert_eq!(
            ids,
            [
                "baseline-ridge/D0-D0/split_0/preprocess",
                "baseline-ridge/D0-D0/split_0/train",
                "baseline-ridge/D0-D0/split_0/infer"
            ]
        );
        assert_eq!(plan.tasks[1].deps, [ids[0]]);
        assert_eq!(plan.tasks[2].deps, [ids[1], ids[0]]);
    }

    #[test]
    fn cross_infer_depends_on_shared_train() {
        let dir = tempfile::tempdir().unwrap();
        let plan = build_plan(&bench(dir.path(), 2, 2), vec![model()], 2, 1, true).unwrap();
        let infer = plan.task("baseline-ridge/D0-D1/split_1/infer").unwrap();
        assert_eq!(
            infer.deps,
            ["baseline-ridge/D0-D0/split_1/train", "baseline-ridge/D0-D1/split_1/preprocess"]
        );
        for t in &plan.tasks {
            for d in &t.deps {
                assert!(plan.task(d).is_some(), "{d}");
            }
        }
    }

    #[test]
    fn deterministic_ids() {
        let dir = tempfile::tempdir().unwrap();
        let idx = bench(dir.path(), 3, 2);
        let a = build_plan(&idx, vec![model()], 2, 2, true).unwrap();
        let b = build_plan(&idx, vec![model()], 2, 2, true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_splits_and_duplicate_models() {
        let dir = tempfile::tempdir().unwrap();
        let idx = bench(dir.path(), 2, 2);
        assert!(matches!(
            build_plan(&idx, vec![model()], 3, 1, true),
            Err(SchedulerError::MissingSplits { split: 2, .. })
        ));
        assert!(matches!(
            build_plan(&idx, vec![model(), model()], 2, 1, true),
            Err(SchedulerError::DuplicateModel(_))
        ));
    }

    #[test]
    fn task_io_flags() {
        let dir = tempfile::tempdir().unwrap();
        let plan = build_plan(&bench(dir.path(), 2, 1), vec![model()], 1, 1, true).unwrap();
        let run = Path::new("/run");
        let get = |flags: &[(String, String)], k: &str| flags.iter().find(|(a, _)| a == k).map(|(_, v)| v.clone());
        let pre = compose_task_io(&plan, plan.task("baseline-ridge/D0-D1/split_0/preprocess").unwrap(), run);
        assert_eq!(get(&pre, "source_dataset").unwrap(), "D0");
        assert_eq!(get(&pre, "target_dataset").unwrap(), "D1");
        assert_eq!(get(&pre, "split_dir").unwrap(), dir.path().join("D0/splits").to_string_lossy());
        let inf = compose_task_io(&plan, plan.task("baseline-ridge/D0-D1/split_0/infer").unwrap(), run);
        assert_eq!(get(&inf, "model_dir").unwrap(), "/run/baseline-ridge/D0-D0/split_0/train/model");
        assert_eq!(get(&inf, "test_data_dir").unwrap(), "/run/baseline-ridge/D0-D1/split_0/preprocess/test_data");
        assert_eq!(get(&inf, "output_dir").unwrap(), "/run/baseline-ridge/D0-D1/split_0/infer");
    }
}
