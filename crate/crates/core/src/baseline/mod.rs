//! Native ridge and k-nearest-neighbour models that implement the stage
//! contract, so the harness can run end to end without external model code.

mod knn;
mod matrix;
mod ridge;
mod stages;
mod standardize;

use std::path::PathBuf;

use thiserror::Error;

use crate::contract::ContractError;
use crate::data::DataError;

pub use knn::{KnnModel, DEFAULT_K};
pub use matrix::{read_partition, write_partition, PartitionData, PARTITION_FILE};
pub use ridge::{RidgeModel, LAMBDA_GRID};
pub use stages::{
    baseline_infer, baseline_preprocess, baseline_train, run_stage, stage_schema, BaselineKind, ModelFile,
    TrainParams, MODEL_FILE, STATS_FILE,
};
pub use standardize::{StandardizationStats, STD_FLOOR};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Contract(#[from] ContractError),
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("singular system at lambda = {0}")]
    SingularSystem(f64),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

impl BaselineError {
    /// True when the failure is a bad command line or config.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            BaselineError::InvalidParam(_)
                | BaselineError::Contract(
                    ContractError::BadArgument(_)
                        | ContractError::UnknownKey { .. }
                        | ContractError::TypeMismatch { .. }
                        | ContractError::MissingRequired(_)
                        | ContractError::ConfigSyntax { .. }
                )
        )
    }
}
