use serde::{Deserialize, Serialize};

use super::CurveError;

pub const EC50_MIN: f64 = 1e-12;
pub const EC50_MAX: f64 = 1e-2;
pub const HILL_MAX: f64 = 10.0;
/// Lower edge used by the optimizer for the slope. The admissible set is
/// `(0, HILL_MAX]`; the fitter never goes below this value.
pub const HILL_MIN_FIT: f64 = 1e-3;

/// Default integration window for AUC, in molar.
pub const AUC_DOSE_LO: f64 = 1e-10;
pub const AUC_DOSE_HI: f64 = 1e-4;

/// One viability observation for a (cell, drug) pair at a single dose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoseResponseMeasurement {
    pub cell_id: String,
    pub drug_id: String,
    /// Molar concentration, strictly positive.
    pub dose: f64,
    /// Fraction of control. Raw assay values may fall outside `[0, 1]`.
    pub viability: f64,
}

/// Three-parameter Hill curve with the top asymptote fixed at 1:
///
/// `E(d) = einf + (1 - einf) / (1 + (d / ec50)^h)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillParams {
    pub einf: f64,
    pub ec50: f64,
    pub h: f64,
}

impl HillParams {
    pub fn new(einf: f64, ec50: f64, h: f64) -> Result<Self, CurveError> {
        let p = Self { einf, ec50, h };
        if p.in_bounds() {
            Ok(p)
        } else {
            Err(CurveError::ParamsOutOfBounds { einf, ec50, h })
        }
    }

    pub fn in_bounds(&self) -> bool {
        (0.0..=1.0).contains(&self.einf)
            && (EC50_MIN..=EC50_MAX).contains(&self.ec50)
            && self.h > 0.0
            && self.h <= HILL_MAX
    }
}

/// Fraction `1 / (1 + 10^(h (u - c)))` evaluated in log10 dose space.
#[inline]
pub(crate) fn logistic_log10(u: f64, log10_ec50: f64, h: f64) -> f64 {
    let z = h * (u - log10_ec50) * std::f64::consts::LN_10;
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Curve value at `dose`. Lies in `[einf, 1]`.
pub fn hill_value(params: &HillParams, dose: f64) -> f64 {
    debug_assert!(dose > 0.0);
    let s = logistic_log10(dose.log10(), params.ec50.log10(), params.h);
    params.einf + (1.0 - params.einf) * s
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
pub fn compute_r2(observed: &[f64], predicted: &[f64]) -> Result<f64, CurveError> {
    if observed.len() != predicted.len() {
        return Err(CurveError::LengthMismatch {
            observed: observed.len(),
            predicted: predicted.len(),
        });
    }
    if observed.len() < 2 {
        return Err(CurveError::TooFewPoints {
            got: observed.len(),
            need: 2,
        });
    }
    let mean = observed.iter().sum::<f64>() / observed.len() as f64;
    let ss_tot: f64 = observed.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 || observed.iter().all(|&y| y == observed[0]) {
        return Err(CurveError::DegenerateVariance);
    }
    let ss_res: f64 = observed
        .iter()
        .zip(predicted)
        .map(|(y, p)| (y - p).powi(2))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// `ln(1 + e^x)` without overflow.
#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Normalized area under the fitted curve over `[dose_lo, dose_hi]`,
/// integrated in log10 dose and divided by the window width.
///
/// The logistic integrates in closed form:
/// `∫ 1/(1 + 10^(h(u-c))) du = u - ln(1 + 10^(h(u-c))) / (h ln 10)`.
pub fn compute_auc(params: &HillParams, dose_lo: f64, dose_hi: f64) -> Result<f64, CurveError> {
    if !(dose_lo > 0.0 && dose_lo < dose_hi) {
        return Err(CurveError::InvalidDoseRange { dose_lo, dose_hi });
    }
    let (a, b) = (dose_lo.log10(), dose_hi.log10());
    let c = params.ec50.log10();
    let k = params.h * std::f64::consts::LN_10;
    // Mean of the complement 1 - s over [a, b].
    let tail = ((softplus(k * (b - c)) - softplus(k * (a - c))) / (k * (b - a))).clamp(0.0, 1.0);
    let auc = 1.0 - (1.0 - params.einf) * tail;
    Ok(auc.clamp(0.0, 1.0))
}
