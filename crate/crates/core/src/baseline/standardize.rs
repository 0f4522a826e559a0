use serde::{Deserialize, Serialize};

/// Smallest divisor used for a feature; constant columns scale to zero.
pub const STD_FLOOR: f64 = 1e-8;

/// Per-feature mean and population standard deviation of the training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizationStats {
    /// Fit on a row-major `n × p` matrix. A column whose spread is below
    /// `STD_FLOOR` gets a unit divisor.
    pub fn fit(x: &[f64], p: usize) -> Self {
        let n = x.len().checked_div(p).unwrap_or(0);
        let mut mean = vec![0.0; p];
        for row in x.chunks(p.max(1)) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let nf = n.max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= nf);
        let mut var = vec![0.0; p];
        for row in x.chunks(p.max(1)) {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / nf).sqrt();
                if sd < STD_FLOOR {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, x: &mut [f64]) {
        let p = self.mean.len();
        for row in x.chunks_mut(p.max(1)) {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
    }
}
