//! Bounded damped least squares for the Hill curve.
//!
//! The optimizer works in `(einf, log10 ec50, log10 h)`. Steps solve the
//! augmented system `[J; sqrt(λ) D] δ = [-r; 0]` through a QR of `J` and a
//! small SVD, which avoids squaring the condition number of `J`. After each step the
//! parameters are projected back into the box. A fixed grid of starting
//! points over `(ec50, h)` is tried and the lowest residual wins, with ties
//! going to the smaller `ec50`.

use nalgebra::{DMatrix, DVector, Matrix6x3, Vector6};
use serde::{Deserialize, Serialize};

use super::hill::{HillParams, EC50_MAX, EC50_MIN, HILL_MAX, HILL_MIN_FIT};
use super::{compute_r2, CurveError, DoseResponseMeasurement};

/// Minimum number of measurements per pair (three parameters plus one).
pub const MIN_POINTS: usize = 4;
pub const DEFAULT_R2_MIN: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub r2_min: f64,
    pub max_iterations: usize,
    /// Stop once an accepted step lowers the cost by less than this fraction.
    pub rel_tolerance: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            r2_min: DEFAULT_R2_MIN,
            max_iterations: 200,
            rel_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: HillParams,
    pub r2: f64,
    pub accepted: bool,
    pub n_points: usize,
}

const LOG_EC50_LO: f64 = -12.0;
const LOG_EC50_HI: f64 = -2.0;
const LN10: f64 = std::f64::consts::LN_10;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Theta {
    einf: f64,
    log_ec50: f64,
    log_h: f64,
}

impl Theta {
    fn project(self) -> Self {
        Self {
            einf: self.einf.clamp(0.0, 1.0),
            log_ec50: self.log_ec50.clamp(LOG_EC50_LO, LOG_EC50_HI),
            log_h: self.log_h.clamp(HILL_MIN_FIT.log10(), HILL_MAX.log10()),
        }
    }

    fn to_params(self) -> HillParams {
        HillParams {
            einf: self.einf,
            ec50: 10f64.powf(self.log_ec50).clamp(EC50_MIN, EC50_MAX),
            h: 10f64.powf(self.log_h).clamp(HILL_MIN_FIT, HILL_MAX),
        }
    }
}

/// Returns `(s, 1 - s)` for `s = 1 / (1 + e^z)`, each computed without
/// cancellation.
#[inline]
fn logistic_pair(z: f64) -> (f64, f64) {
    if z >= 0.0 {
        let e = (-z).exp();
        (e / (1.0 + e), 1.0 / (1.0 + e))
    } else {
        let e = z.exp();
        (1.0 / (1.0 + e), e / (1.0 + e))
    }
}

struct Problem<'a> {
    log_dose: &'a [f64],
    y: &'a [f64],
}

impl Problem<'_> {
    fn model(&self, th: Theta, u: f64) -> (f64, [f64; 3]) {
        let h = 10f64.powf(th.log_h);
        let du = u - th.log_ec50;
        let (s, t) = logistic_pair(h * LN10 * du);
        let amp = 1.0 - th.einf;
        let f = if s > 0.5 { 1.0 - amp * t } else { th.einf + amp * s };
        let st = s * t;
        let d_einf = t;
        let d_c = amp * st * h * LN10;
        let d_q = -amp * st * du * h * LN10 * LN10;
        (f, [d_einf, d_c, d_q])
    }

    fn cost(&self, th: Theta) -> f64 {
        self.log_dose
            .iter()
            .zip(self.y)
            .map(|(&u, &y)| {
                let r = self.model(th, u).0 - y;
                r * r
            })
            .sum()
    }

    /// Least-squares `einf` for fixed `(ec50, h)`, clamped to `[0, 1]`.
    fn best_einf(&self, log_ec50: f64, log_h: f64) -> f64 {
        let h = 10f64.powf(log_h);
        let (mut num, mut den) = (0.0, 0.0);
        for (&u, &y) in self.log_dose.iter().zip(self.y) {
            let (s, t) = logistic_pair(h * LN10 * (u - log_ec50));
            num += t * (y - s);
            den += t * t;
        }
        if den > 0.0 {
            (num / den).clamp(0.0, 1.0)
        } else {
            0.5
        }
    }

    fn solve(&self, start: Theta, cfg: &FitConfig) -> (Theta, f64) {
        let m = self.y.len();
        let mut th = start.project();
        let mut cost = self.cost(th);
        let mut lambda: f64 = 1e-3;
        let mut scale = [0.0f64; 3];
        let mut jac = DMatrix::<f64>::zeros(m, 3);
        let mut rhs = DVector::<f64>::zeros(m);

        for _ in 0..cfg.max_iterations {
            if cost <= f64::MIN_POSITIVE {
                break;
            }
            for (i, (&u, &y)) in self.log_dose.iter().zip(self.y).enumerate() {
                let (f, g) = self.model(th, u);
                for k in 0..3 {
                    jac[(i, k)] = g[k];
                }
                rhs[i] = y - f;
            }
            for k in 0..3 {
                scale[k] = scale[k].max(jac.column(k).norm()).max(1e-300);
            }
            // J = QR once; each damping trial then solves the small system
            // [R; sqrt(λ) D] δ = [Qᵀr; 0].
            let qr = jac.clone().qr();
            let r = qr.r();
            let mut qtr = rhs.clone();
            qr.q_tr_mul(&mut qtr);

            let mut improved = false;
            while lambda < 1e20 {
                let damp = lambda.sqrt();
                let mut a = Matrix6x3::<f64>::zeros();
                let mut b = Vector6::<f64>::zeros();
                for k in 0..3 {
                    for j in k..3 {
                        a[(k, j)] = r[(k, j)];
                    }
                    a[(3 + k, k)] = damp * scale[k];
                    b[k] = qtr[k];
                }
                let step = match a.svd(true, true).solve(&b, 1e-300) {
                    Ok(step) => step,
                    Err(_) => break,
                };
                let cand = Theta {
                    einf: th.einf + step[0],
                    log_ec50: th.log_ec50 + step[1],
                    log_h: th.log_h + step[2],
                }
                .project();
                let cand_cost = self.cost(cand);
                if cand_cost < cost {
                    let rel = (cost - cand_cost) / cost;
                    th = cand;
                    cost = cand_cost;
                    lambda = (lambda / 3.0).max(1e-12);
                    improved = rel >= cfg.rel_tolerance;
                    if !improved {
                        return (th, cost);
                    }
                    break;
                }
                lambda *= 4.0;
            }
            if !improved {
                break;
            }
        }
        (th, cost)
    }
}

/// Deterministic starting grid: four ec50 positions across the measured dose
/// span times two slopes.
fn start_grid(log_dose: &[f64]) -> Vec<(f64, f64)> {
    let lo = log_dose.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = log_dose.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = Vec::with_capacity(8);
    for q in [0.125, 0.375, 0.625, 0.875] {
        let c = (lo + q * (hi - lo)).clamp(LOG_EC50_LO, LOG_EC50_HI);
        for h in [1.0f64, 4.0] {
            out.push((c, h.log10()));
        }
    }
    out
}

/// Fit a Hill curve to the measurements of one (cell, drug) pair.
pub fn fit_hill(
    measurements: &[DoseResponseMeasurement],
    config: &FitConfig,
) -> Result<FitResult, CurveError> {
    if measurements.len() < MIN_POINTS {
        return Err(CurveError::TooFewPoints {
            got: measurements.len(),
            need: MIN_POINTS,
        });
    }
    let mut log_dose = Vec::with_capacity(measurements.len());
    let mut y = Vec::with_capacity(measurements.len());
    for m in measurements {
        if !(m.dose > 0.0) || !m.dose.is_finite() {
            return Err(CurveError::NonPositiveDose(m.dose));
        }
        if !m.viability.is_finite() {
            return Err(CurveError::NonFiniteViability(m.viability));
        }
        log_dose.push(m.dose.log10());
        y.push(m.viability);
    }
    // Constant data cannot produce a meaningful R²; fail before optimizing.
    if y.iter().all(|&v| v == y[0]) {
        return Err(CurveError::DegenerateVariance);
    }

    let problem = Problem { log_dose: &log_dose, y: &y };
    let mut best: Option<(Theta, f64)> = None;
    for (c, q) in start_grid(&log_dose) {
        let start = Theta {
            einf: problem.best_einf(c, q),
            log_ec50: c,
            log_h: q,
        };
        let (th, cost) = problem.solve(start, config);
        let better = match best {
            None => true,
            Some((b, bc)) => cost < bc || (cost == bc && th.log_ec50 < b.log_ec50),
        };
        if better {
            best = Some((th, cost));
        }
    }
    let (th, _) = best.expect("start grid is non-empty");
    let params = th.to_params();
    let predicted: Vec<f64> = log_dose
        .iter()
        .map(|&u| problem.model(th, u).0)
        .collect();
    let r2 = compute_r2(&y, &predicted)?;
    Ok(FitResult {
        params,
        r2,
        accepted: r2 >= config.r2_min,
        n_points: measurements.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::hill_value;

    fn synth(p: &HillParams, doses: &[f64]) -> Vec<DoseResponseMeasurement> {
        doses
            .iter()
            .map(|&d| DoseResponseMeasurement {
                cell_id: "c".into(),
                drug_id: "d".into(),
                dose: d,
                viability: hill_value(p, d),
            })
            .collect()
    }

    fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64))
            .collect()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn recovers_noiseless_curve() {
        let truth = HillParams::new(0.1, 1e-7, 1.5).unwrap();
        let data = synth(&truth, &log_spaced(-10.0, -4.0, 8));
        let fit = fit_hill(&data, &FitConfig::default()).unwrap();
        assert!(rel(fit.params.einf, truth.einf) < 1e-4, "{fit:?}");
        assert!(rel(fit.params.ec50, truth.ec50) < 1e-4, "{fit:?}");
        assert!(rel(fit.params.h, truth.h) < 1e-4, "{fit:?}");
        assert!(fit.r2 >= 0.999);
        assert!(fit.accepted);
        assert_eq!(fit.n_points, 8);
    }

    #[test]
    fn three_points_is_too_few() {
        let truth = HillParams::new(0.1, 1e-7, 1.5).unwrap();
        let data = synth(&truth, &log_spaced(-10.0, -4.0, 3));
        assert!(matches!(
            fit_hill(&data, &FitConfig::default()),
            Err(CurveError::TooFewPoints { got: 3, need: 4 })
        ));
    }

    #[test]
    fn constant_viability_is_degenerate() {
        let flat = HillParams::new(1.0, 1e-7, 1.5).unwrap();
        let data = synth(&flat, &log_spaced(-10.0, -4.0, 8));
        assert!(matches!(
            fit_hill(&data, &FitConfig::default()),
            Err(CurveError::DegenerateVariance)
        ));
    }

    #[test]
    fn rejects_non_positive_dose() {
        let truth = HillParams::new(0.1, 1e-7, 1.5).unwrap();
        let mut data = synth(&truth, &log_spaced(-10.0, -4.0, 6));
        data[2].dose = 0.0;
        assert!(matches!(
            fit_hill(&data, &FitConfig::default()),
            Err(CurveError::NonPositiveDose(_))
        ));
    }

    #[test]
    fn fitted_params_respect_bounds() {
        // Viabilities above control and below zero are used raw.
        let doses = log_spaced(-10.0, -4.0, 8);
        let ys = [1.3, 1.2, 1.1, 0.6, -0.1, -0.2, -0.15, -0.2];
        let data: Vec<_> = doses
            .iter()
            .zip(ys)
            .map(|(&d, v)| DoseResponseMeasurement {
                cell_id: "c".into(),
                drug_id: "d".into(),
                dose: d,
                viability: v,
            })
            .collect();
        let fit = fit_hill(&data, &FitConfig::default()).unwrap();
        assert!(fit.params.in_bounds(), "{fit:?}");
        assert_eq!(fit.params.einf, 0.0);
    }
}
