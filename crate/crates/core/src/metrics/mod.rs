//! Cross-dataset generalization matrices.
//!
//! `g[s, t, n]` is the score of a model trained on source `s`, split `n`,
//! evaluated on target `t`. `G` averages over splits, `Ga` averages each row
//! of `G` off the diagonal, `Gn` divides each row by its diagonal, and `Gna`
//! averages each row of `Gn` off the diagonal. Null scores are skipped and
//! counted, never imputed.

mod aggregate;
mod rundir;
mod summary;

use std::path::PathBuf;

use thiserror::Error;

pub use aggregate::{
    aggregate_g, compute_ga, compute_gn, compute_gna, GMatrices, Matrix, ScoreTensor, StdKind, GN_EPSILON,
    REASON_MISSING_DENOMINATOR, REASON_MISSING_ENTRY, REASON_UNSTABLE_DENOMINATOR,
};
pub use rundir::{load_tensor, write_metrics, write_model_metrics};
pub use summary::{summarize_across, Summary, SummaryTable};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("dataset order differs: expected {expected:?}, got {got:?} for model `{model}`")]
    DatasetOrderMismatch {
        model: String,
        expected: Vec<String>,
        got: Vec<String>,
    },
    #[error("tensor shape: {0}")]
    Shape(String),
    #[error("unknown model `{0}` in run")]
    UnknownModel(String),
    #[error(transparent)]
    Scheduler(#[from] crate::scheduler::SchedulerError),
    #[error(transparent)]
    Contract(#[from] crate::contract::ContractError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl MetricsError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| MetricsError::Io { path, source }
    }
}

/// Mean of the present values, or `None` if there are none.
pub(crate) fn mean_present(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values.into_iter().flatten() {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}
