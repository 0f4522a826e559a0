//! Dose–response curve fitting and AUC response values.

mod fit;
mod hill;
mod table;

use thiserror::Error;

pub use fit::{fit_hill, FitConfig, FitResult, DEFAULT_R2_MIN, MIN_POINTS};
pub use hill::{
    compute_auc, compute_r2, hill_value, DoseResponseMeasurement, HillParams, AUC_DOSE_HI,
    AUC_DOSE_LO, EC50_MAX, EC50_MIN, HILL_MAX, HILL_MIN_FIT,
};
pub use table::{
    build_response_table, read_measurements, write_response_table, FitLog, PairError, ResponseSample,
    RowError, TableConfig,
};

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("too few points: got {got}, need at least {need}")]
    TooFewPoints { got: usize, need: usize },
    #[error("observed values have zero variance")]
    DegenerateVariance,
    #[error("length mismatch: {observed} observed vs {predicted} predicted")]
    LengthMismatch { observed: usize, predicted: usize },
    #[error("dose must be positive and finite, got {0}")]
    NonPositiveDose(f64),
    #[error("viability must be finite, got {0}")]
    NonFiniteViability(f64),
    #[error("invalid dose window [{dose_lo}, {dose_hi}]")]
    InvalidDoseRange { dose_lo: f64, dose_hi: f64 },
    #[error("parameters out of bounds: einf={einf}, ec50={ec50}, h={h}")]
    ParamsOutOfBounds { einf: f64, ec50: f64, h: f64 },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
