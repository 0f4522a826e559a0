use serde::{Deserialize, Serialize};

use super::{mean_present, GMatrices, MetricsError};

/// Model × dataset table with the mean of each row (across datasets) and of
/// each column (across models).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub models: Vec<String>,
    pub datasets: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    pub row_means: Vec<Option<f64>>,
    pub col_means: Vec<Option<f64>>,
}

impl SummaryTable {
    pub fn new(models: Vec<String>, datasets: Vec<String>, values: Vec<Vec<Option<f64>>>) -> Self {
        let row_means = values.iter().map(|r| mean_present(r.iter().copied())).collect();
        let col_means = (0..datasets.len())
            .map(|j| mean_present(values.iter().map(|r| r[j])))
            .collect();
        Self {
            models,
            datasets,
            values,
            row_means,
            col_means,
        }
    }
}

/// Within-dataset scores (diagonals of `G_mean` and `G_std`) for several
/// models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub within_mean: SummaryTable,
    pub within_std: SummaryTable,
}

/// Collect the diagonals of every model's matrices. All models must list
/// the datasets in the same order.
pub fn summarize_across(sets: &[GMatrices]) -> Result<Summary, MetricsError> {
    let datasets = sets.first().map(|g| g.datasets.clone()).unwrap_or_default();
    for g in sets {
        if g.datasets != datasets {
            return Err(MetricsError::DatasetOrderMismatch {
                model: g.model.clone(),
                expected: datasets,
                got: g.datasets.clone(),
            });
        }
    }
    let models: Vec<String> = sets.iter().map(|g| g.model.clone()).collect();
    let diag = |m: &Vec<Vec<Option<f64>>>| (0..datasets.len()).map(|i| m[i][i]).collect::<Vec<_>>();
    Ok(Summary {
        within_mean: SummaryTable::new(models.clone(), datasets.clone(), sets.iter().map(|g| diag(&g.g_mean)).collect()),
        within_std: SummaryTable::new(models, datasets.clone(), sets.iter().map(|g| diag(&g.g_std)).collect()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{ScoreTensor, StdKind};

    fn gm(model: &str, names: &[&str], diag: &[f64]) -> GMatrices {
        let d = names.len();
        let mut values = vec![Some(0.1); d * d];
        for (i, v) in diag.iter().enumerate() {
            values[i * d + i] = Some(*v);
        }
        let t = ScoreTensor::new(model, "r2", names.iter().map(|s| s.to_string()).collect(), 1, values).unwrap();
        GMatrices::from_tensor(&t, StdKind::Population)
    }

    #[test]
    fn single_model_is_its_own_row() {
        let s = summarize_across(&[gm("a", &["x", "y"], &[0.5, 0.7])]).unwrap();
        assert_eq!(s.within_mean.values, vec![vec![Some(0.5), Some(0.7)]]);
        assert_eq!(s.within_mean.col_means, vec![Some(0.5), Some(0.7)]);
        assert_eq!(s.within_std.values, vec![vec![Some(0.0), Some(0.0)]]);
    }

    #[test]
    fn order_mismatch() {
        let r = summarize_across(&[gm("a", &["x", "y"], &[0.5, 0.7]), gm("b", &["y", "x"], &[0.5, 0.7])]);
        assert!(matches!(r, Err(MetricsError::DatasetOrderMismatch { .. })));
    }

    #[test]
    fn null_cells_are_skipped_in_means() {
        let t = SummaryTable::new(
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            vec![vec![Some(1.0), None], vec![Some(3.0), Some(4.0)]],
        );
        assert_eq!(t.row_means, vec![Some(1.0), Some(3.5)]);
        assert_eq!(t.col_means, vec![Some(2.0), Some(4.0)]);
    }
}
