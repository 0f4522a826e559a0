//! Dependency-aware execution of the model × source × target × split grid
//! with a resumable JSON-lines manifest.

mod execute;
mod manifest;
mod plan;

use std::path::PathBuf;

use thiserror::Error;

use crate::data::DataError;

pub use execute::{execute, ExecuteOptions, RunResult, TaskFailure};
pub use manifest::{fingerprint_hex, Manifest, ManifestRecord, TaskStatus, MANIFEST_FILE};
pub use plan::{build_plan, compose_task_io, PipelineTask, RunPlan, PLAN_FILE};

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error("dataset `{dataset}` has no split files for split {split} in {dir}")]
    MissingSplits {
        dataset: String,
        split: usize,
        dir: PathBuf,
    },
    #[error("model `{0}` appears twice in the plan")]
    DuplicateModel(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Contract(#[from] crate::contract::ContractError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    ManifestCorrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0} already exists; pass --resume to continue that run")]
    ManifestExists(PathBuf),
}

impl SchedulerError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| SchedulerError::Io { path, source }
    }
}
