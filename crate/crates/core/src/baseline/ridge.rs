use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::BaselineError;

/// Candidate penalties, searched in this order.
pub const LAMBDA_GRID: [f64; 7] = [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3];

/// `ŷ = intercept + weights·x`, fit by minimising
/// `Σ (y − ŷ)² + λ‖weights‖²`. The intercept is not penalised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub lambda: f64,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl RidgeModel {
    /// Solve the centred normal equations `(XcᵀXc + λI) w = Xcᵀyc` by
    /// Cholesky. `x` is row-major `y.len() × p`.
    pub fn fit(x: &[f64], p: usize, y: &[f64], lambda: f64) -> Result<Self, BaselineError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(BaselineError::InvalidParam(format!("lambda must be positive, got {lambda}")));
        }
        let n = y.len();
        if n == 0 || x.len() != n * p {
            return Err(BaselineError::InvalidParam(format!(
                "design is {} values for {n} rows × {p} columns",
                x.len()
            )));
        }
        let xm = DMatrix::from_row_slice(n, p, x);
        let col_mean = DVector::from_iterator(p, (0..p).map(|j| xm.column(j).sum() / n as f64));
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let mut xc = xm;
        for j in 0..p {
            xc.column_mut(j).add_scalar_mut(-col_mean[j]);
        }
        let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));

        let mut a = xc.tr_mul(&xc);
        for j in 0..p {
            a[(j, j)] += lambda;
        }
        let b = xc.tr_mul(&yc);
        let chol = a.cholesky().ok_or(BaselineError::SingularSystem(lambda))?;
        let w = chol.solve(&b);
        let intercept = y_mean - w.dot(&col_mean);
        Ok(Self {
            lambda,
            weights: w.iter().copied().collect(),
            intercept,
        })
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(row).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict(&self, x: &[f64], n_rows: usize) -> Vec<f64> {
        let p = self.weights.len();
        (0..n_rows).map(|i| self.predict_row(&x[i * p..(i + 1) * p])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data(n: usize, p: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n * p).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y = x
            .chunks(p)
            .map(|r| 0.3 + r.iter().enumerate().map(|(j, v)| (j as f64 - 1.5) * v).sum::<f64>() + rng.random_range(-0.1..0.1))
            .collect();
        (x, y)
    }

    fn loss(x: &[f64], p: usize, y: &[f64], w: &[f64], b: f64, lambda: f64) -> f64 {
        let sse: f64 = x
            .chunks(p)
            .zip(y)
            .map(|(r, yi)| {
                let e = yi - b - r.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
                e * e
            })
            .sum();
        sse + lambda * w.iter().map(|v| v * v).sum::<f64>()
    }

    #[test]
    fn solution_zeroes_the_gradient() {
        let (n, p, lambda) = (60, 5, 0.7);
        let (x, y) = data(n, p, 1);
        let m = RidgeModel::fit(&x, p, &y, lambda).unwrap();
        let resid: Vec<f64> = x.chunks(p).zip(&y).map(|(r, yi)| yi - m.predict_row(r)).collect();
        let mut grad = vec![0.0; p + 1];
        let mut scale = vec![0.0; p + 1];
        for (r, e) in x.chunks(p).zip(&resid) {
            for j in 0..p {
                grad[j] -= 2.0 * r[j] * e;
            }
            grad[p] -= 2.0 * e;
        }
        for (r, yi) in x.chunks(p).zip(&y) {
            for j in 0..p {
                scale[j] += 2.0 * r[j] * yi;
            }
            scale[p] += 2.0 * yi;
        }
        for j in 0..p {
            grad[j] += 2.0 * lambda * m.weights[j];
        }
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(norm(&grad) / norm(&scale) < 1e-8, "{}", norm(&grad) / norm(&scale));

        let h = 1e-5;
        for j in 0..=p {
            let mut wp = m.weights.clone();
            let mut wm = m.weights.clone();
            let (mut bp, mut bm) = (m.intercept, m.intercept);
            if j < p {
                wp[j] += h;
                wm[j] -= h;
            } else {
                bp += h;
                bm -= h;
            }
            let fd = (loss(&x, p, &y, &wp, bp, lambda) - loss(&x, p, &y, &wm, bm, lambda)) / (2.0 * h);
            assert!((fd - grad[j]).abs() < 1e-4 * norm(&scale), "coordinate {j}: fd {fd} vs {}", grad[j]);
        }
    }

    #[test]
    fn huge_lambda_predicts_the_mean() {
        let (x, y) = data(80, 4, 2);
        let m = RidgeModel::fit(&x, 4, &y, 1e9).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-5));
        let ybar = y.iter().sum::<f64>() / y.len() as f64;
        assert!((m.intercept - ybar).abs() < 1e-5);
    }

    #[test]
    fn rejects_non_positive_lambda() {
        assert!(RidgeModel::fit(&[1.0], 1, &[1.0], 0.0).is_err());
    }
}
