//! The three-stage model interface: parameters, config files, prediction and
//! score files, and child-process stage invocation.

mod config;
mod params;
mod predictions;
mod scores;
mod stage;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::ConfigFile;
pub use params::{resolve_params, ParamKind, ParamSet, ParamSpec, ParamValue, Provenance, Schema, Tier};
pub use predictions::{read_predictions, write_predictions, PredictionRecord};
pub use scores::{compute_scores, read_scores, write_scores, ScoreSet};
pub use stage::{
    invoke_stage, validate_outputs, InvokeOptions, ModelSpec, StageCommand, StageOutcome, BUILTIN_MODELS,
    DEFAULT_TIMEOUT, ENV_ALLOWLIST, MODEL_DIR, PREPROCESS_DIRS, STAGE_LOG, TEST_PREDICTIONS, TEST_SCORES,
    VAL_PREDICTIONS, VAL_SCORES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageKind {
    Preprocess,
    Train,
    Infer,
}

impl StageKind {
    pub const ALL: [StageKind; 3] = [StageKind::Preprocess, StageKind::Train, StageKind::Infer];

    pub fn as_str(self) -> &'static str {
        match self {
            StageKind::Preprocess => "preprocess",
            StageKind::Train => "train",
            StageKind::Infer => "infer",
        }
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StageKind {
    type Err = ContractError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ContractError::BadArgument(format!("unknown stage `{s}`")))
    }
}

#[derive(Debug, Error)]
pub enum ContractError {
    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad argument: {0}")]
    BadArgument(String),
    #[error("unknown parameter `{key}` (from {origin:?})")]
    UnknownKey { key: String, origin: Provenance },
    #[error("parameter `{key}`: `{value}` is not a valid {expected}")]
    TypeMismatch {
        key: String,
        value: String,
        expected: ParamKind,
    },
    #[error("missing required parameter `{0}`")]
    MissingRequired(String),
    #[error("could not launch {program}: {source}")]
    LaunchFailure {
        program: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("stage timed out after {seconds:.1} s")]
    Timeout { seconds: f64, diagnostics: String },
    #[error("stage exited with status {code:?}")]
    NonZeroExit { code: Option<i32>, diagnostics: String },
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("{path}: schema mismatch: {message}")]
    SchemaMismatch { path: PathBuf, message: String },
    #[error("{path}: duplicate sample_id `{id}`")]
    DuplicateSampleId { path: PathBuf, id: String },
    #[error("invalid model spec: {0}")]
    InvalidModelSpec(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
}

impl ContractError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| ContractError::Io { path, source }
    }

    /// Short class name recorded in run manifests.
    pub fn class(&self) -> &'static str {
        match self {
            ContractError::LaunchFailure { .. } => "launch-failure",
            ContractError::Timeout { .. } => "timeout",
            ContractError::NonZeroExit { .. } => "nonzero-exit",
            ContractError::ContractViolation(_)
            | ContractError::SchemaMismatch { .. }
            | ContractError::DuplicateSampleId { .. } => "contract-violation",
            ContractError::Io { .. } => "io",
            _ => "usage",
        }
    }

    /// Captured child output, when the error came from a running stage.
    pub fn diagnostics(&self) -> Option<&str> {
        match self {
            ContractError::Timeout { diagnostics, .. } | ContractError::NonZeroExit { diagnostics, .. } => {
                Some(diagnostics)
            }
            _ => None,
        }
    }
}
