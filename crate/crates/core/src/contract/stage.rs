//! Model specs and child-process stage invocation.
//!
//! A stage runs as its own process with a scrubbed environment, working
//! directory set to the stage workdir, and stdout/stderr appended to
//! `stage.log` there. Success requires exit status 0 and the stage's
//! required artifacts present and parseable.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use super::{read_predictions, read_scores, ContractError, StageKind};
use crate::data::FeatureSelection;

pub const MODEL_DIR: &str = "model";
pub const VAL_PREDICTIONS: &str = "val_y_data_predicted.csv";
pub const VAL_SCORES: &str = "val_scores.json";
pub const TEST_PREDICTIONS: &str = "test_y_data_predicted.csv";
pub const TEST_SCORES: &str = "test_scores.json";
pub const STAGE_LOG: &str = "stage.log";
pub const PREPROCESS_DIRS: [&str; 3] = ["train_data", "val_data", "test_data"];

pub const BUILTIN_MODELS: [&str; 2] = ["baseline-ridge", "baseline-knn"];
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(3600);

/// Variables passed through to stages besides any `CSABENCH_*` ones.
pub const ENV_ALLOWLIST: [&str; 9] = [
    "PATH",
    "HOME",
    "USER",
    "LANG",
    "LC_ALL",
    "TMPDIR",
    "LD_LIBRARY_PATH",
    "PYTHONPATH",
    "VIRTUAL_ENV",
];

/// Bytes of `stage.log` kept in outcomes and errors.
const DIAGNOSTIC_TAIL: u64 = 8 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCommand {
    pub program: PathBuf,
    #[serde(default)]
    pub args: Vec<String>,
}

/// How to launch a model's three stages. Spec files are JSON with the same
/// shape; relative program paths resolve against the spec file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub stages: BTreeMap<StageKind, StageCommand>,
    /// Feature kinds to join; empty lists mean every kind the source
    /// dataset provides.
    #[serde(default)]
    pub features: FeatureSelection,
    #[serde(default)]
    pub config: Option<PathBuf>,
    #[serde(default)]
    pub supplementary_dir: Option<PathBuf>,
    #[serde(default)]
    pub timeout_secs: Option<f64>,
}

impl ModelSpec {
    /// A native baseline run through `harness stage <name> <stage>`.
    pub fn builtin(name: &str, harness: &Path) -> Result<Self, ContractError> {
        if !BUILTIN_MODELS.contains(&name) {
            return Err(ContractError::UnknownModel(name.to_string()));
        }
        let stages = StageKind::ALL
            .into_iter()
            .map(|s| {
                let cmd = StageCommand {
                    program: harness.to_path_buf(),
                    args: vec!["stage".into(), name.into(), s.as_str().into()],
                };
                (s, cmd)
            })
            .collect();
        Ok(Self {
            name: name.to_string(),
            stages,
            features: FeatureSelection::default(),
            config: None,
            supplementary_dir: None,
            timeout_secs: None,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ContractError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(ContractError::io(path))?;
        let mut spec: Self = serde_json::from_str(&text)
            .map_err(|e| ContractError::InvalidModelSpec(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let absolutize = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for cmd in spec.stages.values_mut() {
            if cmd.program.components().count() > 1 {
                absolutize(&mut cmd.program);
            }
        }
        if let Some(c) = spec.config.as_mut() {
            absolutize(c);
        }
        if let Some(d) = spec.supplementary_dir.as_mut() {
            absolutize(d);
        }
        spec.validate()?;
        Ok(spec)
    }

    /// A builtin name or a path to a spec file.
    pub fn resolve(arg: &str, harness: &Path) -> Result<Self, ContractError> {
        if BUILTIN_MODELS.contains(&arg) {
            Self::builtin(arg, harness)
        } else if Path::new(arg).is_file() {
            Self::load(arg)
        } else {
            Err(ContractError::UnknownModel(arg.to_string()))
        }
    }

    pub fn validate(&self) -> Result<(), ContractError> {
        let ok_char = |c: char| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.');
        if self.name.is_empty() || self.name.starts_with('.') || !self.name.chars().all(ok_char) {
            return Err(ContractError::InvalidModelSpec(format!(
                "model name `{}` must be non-empty and use only [A-Za-z0-9._-]",
                self.name
            )));
        }
        for s in StageKind::ALL {
            if !self.stages.contains_key(&s) {
                return Err(ContractError::InvalidModelSpec(format!("`{}` declares no {s} stage", self.name)));
            }
        }
        if let Some(t) = self.timeout_secs {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ContractError::InvalidModelSpec("timeout_secs must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        self.timeout_secs.map(Duration::from_secs_f64).unwrap_or(DEFAULT_TIMEOUT)
    }
}

#[derive(Debug, Clone, Default)]
pub struct InvokeOptions {
    /// Overrides the model's timeout.
    pub timeout: Option<Duration>,
    /// Set after scrubbing.
    pub env: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub stage: StageKind,
    pub exit_code: Option<i32>,
    pub wall_time_secs: f64,
    pub artifacts: Vec<PathBuf>,
    pub diagnostics: String,
}

fn log_tail(path: &Path) -> String {
    let Ok(mut f) = File::open(path) else {
        return String::new();
    };
    let len = f.metadata().map(|m| m.len()).unwrap_or(0);
    let start = len.saturating_sub(DIAGNOSTIC_TAIL);
    if f.seek(SeekFrom::Start(start)).is_err() {
        return String::new();
    }
    let mut buf = Vec::new();
    let _ = f.read_to_end(&mut buf);
    String::from_utf8_lossy(&buf).into_owned()
}

fn scrubbed_env() -> Vec<(String, String)> {
    std::env::vars()
        .filter(|(k, _)| ENV_ALLOWLIST.contains(&k.as_str()) || k.starts_with("CSABENCH_"))
        .collect()
}

/// Run one stage of `spec` with `flags` rendered as `--key value`. The
/// `output_dir` flag, if present, is where artifacts are checked; otherwise
/// `workdir` is.
pub fn invoke_stage(
    spec: &ModelSpec,
    stage: StageKind,
    flags: &[(String, String)],
    workdir: &Path,
    opts: &InvokeOptions,
) -> Result<StageOutcome, ContractError> {
    let cmd = spec
        .stages
        .get(&stage)
        .ok_or_else(|| ContractError::InvalidModelSpec(format!("`{}` declares no {stage} stage", spec.name)))?;
    fs::create_dir_all(workdir).map_err(ContractError::io(workdir))?;
    let log_path = workdir.join(STAGE_LOG);
    let log = File::create(&log_path).map_err(ContractError::io(&log_path))?;
    let log_err = log.try_clone().map_err(ContractError::io(&log_path))?;

    let mut command = Command::new(&cmd.program);
    command
        .args(&cmd.args)
        .args(flags.iter().flat_map(|(k, v)| [format!("--{k}"), v.clone()]))
        .env_clear()
        .envs(scrubbed_env())
        .envs(&opts.env)
        .current_dir(workdir)
        .stdin(Stdio::null())
        .stdout(log)
        .stderr(log_err);

    let started = Instant::now();
    let mut child = command.spawn().map_err(|source| ContractError::LaunchFailure {
        program: cmd.program.clone(),
        source,
    })?;
    let timeout = opts.timeout.unwrap_or_else(|| spec.timeout());
    let status = match child.wait_timeout(timeout).map_err(ContractError::io(&cmd.program))? {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(ContractError::Timeout {
                seconds: timeout.as_secs_f64(),
                diagnostics: log_tail(&log_path),
            });
        }
    };
    let wall_time_secs = started.elapsed().as_secs_f64();
    if !status.success() {
        return Err(ContractError::NonZeroExit {
            code: status.code(),
            diagnostics: log_tail(&log_path),
        });
    }

    let out_dir = flags
        .iter()
        .find(|(k, _)| k == "output_dir")
        .map(|(_, v)| PathBuf::from(v))
        .unwrap_or_else(|| workdir.to_path_buf());
    let artifacts = validate_outputs(stage, &out_dir)?;
    Ok(StageOutcome {
        stage,
        exit_code: status.code(),
        wall_time_secs,
        artifacts,
        diagnostics: log_tail(&log_path),
    })
}

/// Check the artifacts `stage` must leave in `dir` and return their paths.
pub fn validate_outputs(stage: StageKind, dir: &Path) -> Result<Vec<PathBuf>, ContractError> {
    let violation = |m: String| ContractError::ContractViolation(m);
    let need_dir = |name: &str| -> Result<PathBuf, ContractError> {
        let p = dir.join(name);
        if p.is_dir() {
            Ok(p)
        } else {
            Err(violation(format!("{stage}: missing directory {}", p.display())))
        }
    };
    let need_file = |name: &str| -> Result<PathBuf, ContractError> {
        let p = dir.join(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(violation(format!("{stage}: missing file {}", p.display())))
        }
    };
    let parsed = |r: Result<(), ContractError>| r.map_err(|e| violation(format!("{stage}: {e}")));

    match stage {
        StageKind::Preprocess => PREPROCESS_DIRS.iter().map(|d| need_dir(d)).collect(),
        StageKind::Train | StageKind::Infer => {
            let (preds, scores) = if stage == StageKind::Train {
                (VAL_PREDICTIONS, VAL_SCORES)
            } else {
                (TEST_PREDICTIONS, TEST_SCORES)
            };
            let mut out = Vec::new();
            if stage == StageKind::Train {
                out.push(need_dir(MODEL_DIR)?);
            }
            let p = need_file(preds)?;
            parsed(read_predictions(&p).map(drop))?;
            let s = need_file(scores)?;
            parsed(read_scores(&s).map(drop))?;
            out.extend([p, s]);
            Ok(out)
        }
    }
}
