//! Regression scores over prediction records.
//!
//! The JSON form is a flat object of metric name to number or null. Keys a
//! model adds beyond the standard five are kept in `extra` and written back
//! unchanged.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ContractError, PredictionRecord};
use crate::curves::compute_r2;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreSet {
    pub r2: Option<f64>,
    pub mse: Option<f64>,
    pub rmse: Option<f64>,
    pub pearson_r: Option<f64>,
    pub spearman_rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub null_reason: Option<String>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl ScoreSet {
    /// Look up a metric by name, including model-added numeric keys.
    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "r2" => self.r2,
            "mse" => self.mse,
            "rmse" => self.rmse,
            "pearson_r" => self.pearson_r,
            "spearman_rho" => self.spearman_rho,
            other => self.extra.get(other).and_then(|v| v.as_f64()),
        }
    }
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties given their average rank.
fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Scores for `records`. Sums run in `sample_id` order so the result does not
/// depend on record order. Undefined metrics are null and `null_reason` says
/// why.
pub fn compute_scores(records: &[PredictionRecord]) -> ScoreSet {
    let mut sorted: Vec<&PredictionRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    let t: Vec<f64> = sorted.iter().map(|r| r.auc_true).collect();
    let p: Vec<f64> = sorted.iter().map(|r| r.auc_pred).collect();

    let mut s = ScoreSet::default();
    if t.len() < 2 {
        s.null_reason = Some(format!("too-few-records: {}", t.len()));
        return s;
    }
    if !p.iter().all(|v| v.is_finite()) {
        s.null_reason = Some("non-finite-predictions".into());
        return s;
    }
    let mse = t.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / t.len() as f64;
    s.mse = Some(mse);
    s.rmse = Some(mse.sqrt());
    match compute_r2(&t, &p) {
        Ok(r2) => s.r2 = Some(r2),
        Err(_) => {
            s.null_reason = Some("degenerate-variance: auc_true values are all equal".into());
            return s;
        }
    }
    s.pearson_r = pearson(&t, &p);
    s.spearman_rho = pearson(&average_ranks(&t), &average_ranks(&p));
    if s.pearson_r.is_none() {
        s.null_reason = Some("constant-predictions: correlations undefined".into());
    }
    s
}

pub fn write_scores(path: impl AsRef<Path>, scores: &ScoreSet) -> Result<(), ContractError> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(scores).expect("scores serialize");
    std::fs::write(path, text + "\n").map_err(ContractError::io(path))
}

/// Read a scores file. `r2` must be present as a number or null.
pub fn read_scores(path: impl AsRef<Path>) -> Result<ScoreSet, ContractError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(ContractError::io(path))?;
    let schema = |message: String| ContractError::SchemaMismatch {
        path: path.to_path_buf(),
        message,
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| schema(e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| schema("scores must be a JSON object".into()))?;
    match obj.get("r2") {
        Some(v) if v.is_number() || v.is_null() => {}
        _ => return Err(schema("`r2` must be a number or null".into())),
    }
    serde_json::from_value(value).map_err(|e| schema(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn recs(t: &[f64], p: &[f64]) -> Vec<PredictionRecord> {
        t.iter()
            .zip(p)
            .enumerate()
            .map(|(i, (&a, &b))| PredictionRecord {
                sample_id: format!("{i:05}"),
                cell_id: "c".into(),
                drug_id: "d".into(),
                auc_true: a,
                auc_pred: b,
            })
            .collect()
    }

    #[test]
    fn perfect_predictions() {
        let t = [0.1, 0.4, 0.35, 0.9];
        let s = compute_scores(&recs(&t, &t));
        assert_eq!((s.r2, s.mse, s.rmse), (Some(1.0), Some(0.0), Some(0.0)));
        assert_abs_diff_eq!(s.pearson_r.unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.spearman_rho.unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(s.null_reason, None);
    }

    #[test]
    fn reversed_ordering() {
        let t = [0.1, 0.2, 0.5, 0.9];
        let p = [0.9, 0.8, 0.3, 0.0];
        assert_abs_diff_eq!(compute_scores(&recs(&t, &p)).spearman_rho.unwrap(), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn hand_arithmetic() {
        let s = compute_scores(&recs(&[1.0, 0.5, 0.0], &[0.9, 0.5, 0.1]));
        assert_abs_diff_eq!(s.r2.unwrap(), 0.96, epsilon = 1e-12);
        assert_abs_diff_eq!(s.mse.unwrap(), 0.02 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.rmse.unwrap(), (0.02f64 / 3.0).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn ties_use_average_rank() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn degenerate_truth_is_null_with_reason() {
        let s = compute_scores(&recs(&[0.5, 0.5, 0.5], &[0.1, 0.2, 0.3]));
        assert_eq!(s.r2, None);
        assert!(s.null_reason.unwrap().starts_with("degenerate-variance"));
        assert!(compute_scores(&recs(&[0.5], &[0.5])).null_reason.is_some());
    }

    #[test]
    fn json_keeps_extra_keys_and_nulls() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        std::fs::write(&path, r#"{"r2": null, "mse": 0.1, "rmse": null, "pearson_r": null, "spearman_rho": null, "auprc": 0.7}"#).unwrap();
        let s = read_scores(&path).unwrap();
        assert_eq!(s.r2, None);
        assert_eq!(s.metric("auprc"), Some(0.7));
        write_scores(&path, &s).unwrap();
        assert_eq!(read_scores(&path).unwrap(), s);
        std::fs::write(&path, r#"{"mse": 0.1}"#).unwrap();
        assert!(matches!(read_scores(&path), Err(ContractError::SchemaMismatch { .. })));
    }

    proptest! {
        #[test]
        fn order_invariant(
            pairs in prop::collection::vec((0.0f64..1.0, -0.5f64..1.5), 2..60),
            seed in any::<u64>(),
        ) {
            let t: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let p: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let base = recs(&t, &p);
            let mut shuffled = base.clone();
            let mut x = seed | 1;
            for i in (1..shuffled.len()).rev() {
                x ^= x << 13; x ^= x >> 7; x ^= x << 17;
                shuffled.swap(i, (x % (i as u64 + 1)) as usize);
            }
            let a = compute_scores(&base);
            let b = compute_scores(&shuffled);
            prop_assert_eq!(&a, &b);
            if let (Some(r2), Some(mse), Some(rmse)) = (a.r2, a.mse, a.rmse) {
                prop_assert!(r2 <= 1.0);
                prop_assert_eq!(rmse, mse.sqrt());
            }
        }
    }
}
