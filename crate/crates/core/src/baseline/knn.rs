use serde::{Deserialize, Serialize};

use super::BaselineError;

pub const DEFAULT_K: usize = 5;

/// Mean target of the `k` nearest training rows in Euclidean distance. Ties
/// in distance go to the earlier training row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub n_features: usize,
    pub train_x: Vec<f64>,
    pub train_y: Vec<f64>,
}

impl KnnModel {
    pub fn fit(x: &[f64], p: usize, y: &[f64], k: usize) -> Result<Self, BaselineError> {
        if k == 0 {
            return Err(BaselineError::InvalidParam("k must be at least 1".into()));
        }
        if y.is_empty() || x.len() != y.len() * p {
            return Err(BaselineError::InvalidParam("empty or ragged training matrix".into()));
        }
        Ok(Self {
            k,
            n_features: p,
            train_x: x.to_vec(),
            train_y: y.to_vec(),
        })
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let p = self.n_features;
        let mut d: Vec<(f64, usize)> = (0..self.train_y.len())
            .map(|i| {
                let t = &self.train_x[i * p..(i + 1) * p];
                (t.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i)
            })
            .collect();
        let k = self.k.min(d.len());
        d.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut near = d[..k].to_vec();
        near.sort_by_key(|&(_, i)| i);
        near.iter().map(|&(_, i)| self.train_y[i]).sum::<f64>() / k as f64
    }

    pub fn predict(&self, x: &[f64], n_rows: usize) -> Vec<f64> {
        let p = self.n_features;
        (0..n_rows).map(|i| self.predict_row(&x[i * p..(i + 1) * p])).collect()
    }
}
