use serde::{Deserialize, Serialize};

use super::{mean_present, MetricsError};

/// Smallest within-dataset score `Gn` divides by.
pub const GN_EPSILON: f64 = 0.05;

pub const REASON_UNSTABLE_DENOMINATOR: &str = "unstable-denominator";
pub const REASON_MISSING_DENOMINATOR: &str = "missing-denominator";
pub const REASON_MISSING_ENTRY: &str = "missing-entry";

/// Scores `g[s, t, n]`, stored at `(s * d + t) * n_splits + n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTensor {
    pub model: String,
    pub metric: String,
    pub datasets: Vec<String>,
    pub n_splits: usize,
    pub values: Vec<Option<f64>>,
}

impl ScoreTensor {
    pub fn new(
        model: &str,
        metric: &str,
        datasets: Vec<String>,
        n_splits: usize,
        values: Vec<Option<f64>>,
    ) -> Result<Self, MetricsError> {
        let d = datasets.len();
        if n_splits == 0 || values.len() != d * d * n_splits {
            return Err(MetricsError::Shape(format!(
                "{} values for {d} datasets and {n_splits} splits",
                values.len()
            )));
        }
        Ok(Self {
            model: model.to_string(),
            metric: metric.to_string(),
            datasets,
            n_splits,
            values,
        })
    }

    pub fn d(&self) -> usize {
        self.datasets.len()
    }

    pub fn get(&self, s: usize, t: usize, n: usize) -> Option<f64> {
        self.values[(s * self.d() + t) * self.n_splits + n]
    }

    pub fn splits(&self, s: usize, t: usize) -> &[Option<f64>] {
        let start = (s * self.d() + t) * self.n_splits;
        &self.values[start..start + self.n_splits]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StdKind {
    /// Divide by n.
    #[default]
    Population,
    /// Divide by n − 1; null with fewer than two values.
    Sample,
}

pub type Matrix = Vec<Vec<Option<f64>>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GMatrices {
    pub model: String,
    pub metric: String,
    pub datasets: Vec<String>,
    pub g_mean: Matrix,
    pub g_std: Matrix,
    pub n_valid: Vec<Vec<usize>>,
    pub ga: Vec<Option<f64>>,
    pub gn: Matrix,
    pub gn_reason: Vec<Vec<Option<String>>>,
    pub gna: Vec<Option<f64>>,
}

impl GMatrices {
    pub fn from_tensor(tensor: &ScoreTensor, std_kind: StdKind) -> Self {
        let (g_mean, g_std, n_valid) = aggregate_g(tensor, std_kind);
        let ga = compute_ga(&g_mean);
        let (gn, gn_reason) = compute_gn(&g_mean);
        let gna = compute_gna(&gn);
        Self {
            model: tensor.model.clone(),
            metric: tensor.metric.clone(),
            datasets: tensor.datasets.clone(),
            g_mean,
            g_std,
            n_valid,
            ga,
            gn,
            gn_reason,
            gna,
        }
    }
}

/// Entrywise mean and standard deviation over the non-null splits, and the
/// number of non-null splits. Entries with no valid split are null.
pub fn aggregate_g(tensor: &ScoreTensor, std_kind: StdKind) -> (Matrix, Matrix, Vec<Vec<usize>>) {
    let d = tensor.d();
    let mut mean = vec![vec![None; d]; d];
    let mut std = vec![vec![None; d]; d];
    let mut n_valid = vec![vec![0; d]; d];
    for s in 0..d {
        for t in 0..d {
            let xs: Vec<f64> = tensor.splits(s, t).iter().flatten().copied().collect();
            n_valid[s][t] = xs.len();
            let Some(m) = mean_present(xs.iter().map(|&x| Some(x))) else {
                continue;
            };
            mean[s][t] = Some(m);
            let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
            std[s][t] = match std_kind {
                StdKind::Population => Some((ss / xs.len() as f64).sqrt()),
                StdKind::Sample if xs.len() >= 2 => Some((ss / (xs.len() - 1) as f64).sqrt()),
                StdKind::Sample => None,
            };
        }
    }
    (mean, std, n_valid)
}

fn off_diagonal_means(m: &Matrix) -> Vec<Option<f64>> {
    (0..m.len())
        .map(|s| mean_present(m[s].iter().enumerate().filter(|&(t, _)| t != s).map(|(_, v)| *v)))
        .collect()
}

/// Row means of `G` excluding the diagonal, skipping nulls.
pub fn compute_ga(g_mean: &Matrix) -> Vec<Option<f64>> {
    off_diagonal_means(g_mean)
}

/// `G[s, t] / G[s, s]`, null with a reason when the diagonal is missing or
/// below `GN_EPSILON`, or when the entry itself is missing.
pub fn compute_gn(g_mean: &Matrix) -> (Matrix, Vec<Vec<Option<String>>>) {
    let d = g_mean.len();
    let mut gn = vec![vec![None; d]; d];
    let mut why = vec![vec![None; d]; d];
    for s in 0..d {
        for t in 0..d {
            let reason = match (g_mean[s][s], g_mean[s][t]) {
                (None, _) => Some(REASON_MISSING_DENOMINATOR),
                (Some(diag), _) if !(diag >= GN_EPSILON) => Some(REASON_UNSTABLE_DENOMINATOR),
                (_, None) => Some(REASON_MISSING_ENTRY),
                (Some(diag), Some(v)) => {
                    gn[s][t] = Some(if s == t { 1.0 } else { v / diag });
                    None
                }
            };
            why[s][t] = reason.map(str::to_string);
        }
    }
    (gn, why)
}

/// Row means of `Gn` excluding the diagonal, skipping nulls.
pub fn compute_gna(gn: &Matrix) -> Vec<Option<f64>> {
    off_diagonal_means(gn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn tensor(d: usize, n: usize, values: Vec<Option<f64>>) -> ScoreTensor {
        ScoreTensor::new("m", "r2", (0..d).map(|i| format!("D{i}")).collect(), n, values).unwrap()
    }

    #[test]
    fn two_splits_mean_and_std() {
        let t = tensor(1, 2, vec![Some(0.5), Some(0.7)]);
        let (m, s, n) = aggregate_g(&t, StdKind::Population);
        assert_abs_diff_eq!(m[0][0].unwrap(), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(s[0][0].unwrap(), 0.1, epsilon = 1e-15);
        assert_eq!(n[0][0], 2);
        let (_, s, _) = aggregate_g(&t, StdKind::Sample);
        assert_abs_diff_eq!(s[0][0].unwrap(), 0.1 * 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn all_null_splits() {
        let t = tensor(1, 3, vec![None; 3]);
        let (m, s, n) = aggregate_g(&t, StdKind::Population);
        assert_eq!((m[0][0], s[0][0], n[0][0]), (None, None, 0));
    }

    #[test]
    fn ga_examples() {
        let row = vec![Some(0.8), Some(0.6), Some(0.4), Some(0.2), Some(0.0)];
        let g = vec![row.clone(); 5];
        assert_abs_diff_eq!(compute_ga(&g)[0].unwrap(), 0.3, epsilon = 1e-15);
        let g2 = vec![vec![Some(1.0), Some(2.0)], vec![Some(3.0), Some(4.0)]];
        assert_eq!(compute_ga(&g2), vec![Some(2.0), Some(3.0)]);
    }

    #[test]
    fn gn_examples() {
        let g = vec![vec![Some(0.8), Some(0.4)], vec![Some(0.2), Some(0.01)]];
        let (gn, why) = compute_gn(&g);
        assert_eq!(gn[0], vec![Some(1.0), Some(0.5)]);
        assert_eq!(gn[1], vec![None, None]);
        assert_eq!(why[1][0].as_deref(), Some(REASON_UNSTABLE_DENOMINATOR));
        let neg = vec![vec![Some(-0.3)]];
        assert_eq!(compute_gn(&neg).1[0][0].as_deref(), Some(REASON_UNSTABLE_DENOMINATOR));
    }

    #[test]
    fn gna_examples() {
        let gn = vec![vec![Some(1.0), Some(0.5), Some(0.5), Some(0.5), Some(0.5)]; 5];
        assert_eq!(compute_gna(&gn)[0], Some(0.5));
        let nulls = vec![vec![Some(1.0), None], vec![None, Some(1.0)]];
        assert_eq!(compute_gna(&nulls), vec![None, None]);
    }

    fn close(a: Option<f64>, b: Option<f64>) -> bool {
        match (a, b) {
            (Some(x), Some(y)) => (x - y).abs() <= 1e-12 * (1.0 + x.abs()),
            (None, None) => true,
            _ => false,
        }
    }

    fn arb_tensor() -> impl Strategy<Value = ScoreTensor> {
        (1usize..5, 1usize..4).prop_flat_map(|(d, n)| {
            prop::collection::vec(prop::option::weighted(0.85, -0.5f64..1.0), d * d * n)
                .prop_map(move |v| tensor(d, n, v))
        })
    }

    proptest! {
        #[test]
        fn gn_diagonal_is_one_where_defined(t in arb_tensor()) {
            let g = GMatrices::from_tensor(&t, StdKind::Population);
            for s in 0..t.d() {
                prop_assert!(g.gn[s][s].is_none() || g.gn[s][s] == Some(1.0));
                if g.g_mean[s][s].is_some_and(|v| v >= GN_EPSILON) {
                    prop_assert_eq!(g.gn[s][s], Some(1.0));
                }
            }
        }

        #[test]
        fn constant_splits_have_zero_std(v in -1.0f64..1.0, n in 1usize..6) {
            let (_, s, _) = aggregate_g(&tensor(1, n, vec![Some(v); n]), StdKind::Population);
            prop_assert!(s[0][0].unwrap() < 1e-15);
        }

        #[test]
        fn permutation_equivariance(t in arb_tensor(), seed in any::<u64>()) {
            let d = t.d();
            let mut perm: Vec<usize> = (0..d).collect();
            let mut x = seed | 1;
            for i in (1..d).rev() {
                x ^= x << 13; x ^= x >> 7; x ^= x << 17;
                perm.swap(i, (x % (i as u64 + 1)) as usize);
            }
            let mut values = vec![None; t.values.len()];
            for s in 0..d { for u in 0..d { for n in 0..t.n_splits {
                values[(s * d + u) * t.n_splits + n] = t.get(perm[s], perm[u], n);
            }}}
            let names = perm.iter().map(|&i| t.datasets[i].clone()).collect();
            let p = ScoreTensor::new("m", "r2", names, t.n_splits, values).unwrap();
            let a = GMatrices::from_tensor(&t, StdKind::Population);
            let b = GMatrices::from_tensor(&p, StdKind::Population);
            for s in 0..d {
                // Row means sum in a different order after permuting.
                prop_assert!(close(b.ga[s], a.ga[perm[s]]));
                prop_assert!(close(b.gna[s], a.gna[perm[s]]));
                for u in 0..d {
                    prop_assert_eq!(b.g_mean[s][u], a.g_mean[perm[s]][perm[u]]);
                    prop_assert_eq!(b.gn[s][u], a.gn[perm[s]][perm[u]]);
                }
            }
        }
    }
}
