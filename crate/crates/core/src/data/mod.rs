//! On-disk benchmark data: response tables, feature tables, splits, and the
//! synthetic benchmark generator.

mod benchmark;
mod features;
mod join;
mod lock;
mod response;
mod splits;
mod synth;

use std::path::PathBuf;

use thiserror::Error;

pub use benchmark::{BenchmarkIndex, DatasetDescriptor, BENCHMARK_INDEX};
pub use features::{load_feature_table, write_feature_table, EntityKind, FeatureTable, RejectedRow};
pub use join::{join_features, DesignMatrix, FeatureSelection};
pub use lock::DirLock;
pub use response::{load_response_table, write_response_table, ResponseRow, ResponseTable};
pub use splits::{
    generate_splits, read_split_files, split_file_name, write_split_files, Partition, SplitSet,
};
pub use synth::{generate_synthetic_benchmark, SynthManifest, SynthSpec};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: duplicate pair ({cell_id}, {drug_id}) at line {line}")]
    DuplicatePairWithinDataset {
        path: PathBuf,
        cell_id: String,
        drug_id: String,
        line: u64,
    },
    #[error("{path}: line {line}: {message}")]
    InvalidRow {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{0}: table has no data rows")]
    EmptyTable(PathBuf),
    #[error("{path}: all {rejected} rows rejected")]
    AllRowsRejected { path: PathBuf, rejected: usize },
    #[error("{path}: duplicate entity id `{id}`")]
    DuplicateEntity { path: PathBuf, id: String },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("need at least {needed} samples for {n_splits} splits, got {n_samples}")]
    TooSmall {
        n_samples: usize,
        n_splits: usize,
        needed: usize,
    },
    #[error("{path}: index {index} out of range for {n_samples} samples")]
    IndexOutOfRange {
        path: PathBuf,
        index: usize,
        n_samples: usize,
    },
    #[error("{0}: partition is empty")]
    EmptyPartition(PathBuf),
    #[error("split {split}: {message}")]
    InvalidSplit { split: usize, message: String },
    #[error("unknown entities: {}", .missing.join(", "))]
    UnknownEntity { missing: Vec<String> },
    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),
    #[error("unknown feature kind `{kind}` for {entity} in dataset `{dataset}`")]
    UnknownFeatureKind {
        dataset: String,
        entity: EntityKind,
        kind: String,
    },
    #[error("directory {0} is locked by another writer")]
    Locked(PathBuf),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl DataError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| DataError::Io { path, source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>) -> impl FnOnce(csv::Error) -> Self {
        let path = path.into();
        move |source| DataError::Csv { path, source }
    }

    pub(crate) fn json(path: impl Into<PathBuf>) -> impl FnOnce(serde_json::Error) -> Self {
        let path = path.into();
        move |source| DataError::Json { path, source }
    }
}

/// Floats in data files are written with 17 significant digits.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
