//! Least squares fitted directly on generated data, independent of the
//! baseline models: a larger shift on the target must lower R² onto it.

use csabench::data::{
    generate_synthetic_benchmark, join_features, BenchmarkIndex, DesignMatrix, EntityKind, FeatureSelection,
    SynthSpec,
};
use nalgebra::{DMatrix, DVector};

fn design(index: &BenchmarkIndex, name: &str) -> DesignMatrix {
    let rows = index.load_response(name).unwrap().rows;
    let cells = index.load_features(name, EntityKind::Cell, "expr").unwrap();
    let drugs = index.load_features(name, EntityKind::Drug, "desc").unwrap();
    let selection = FeatureSelection { cell: vec!["expr".into()], drug: vec!["desc".into()] };
    join_features(&rows, &[cells], &[drugs], &selection).unwrap()
}

fn with_intercept(d: &DesignMatrix) -> DMatrix<f64> {
    let p = d.n_cols();
    DMatrix::from_fn(d.n_rows, p + 1, |i, j| if j == p { 1.0 } else { d.x[i * p + j] })
}

fn ols_r2(train: &DesignMatrix, test: &DesignMatrix) -> f64 {
    let x = with_intercept(train);
    let y = DVector::from_vec(train.y.clone());
    let beta = x.clone().svd(true, true).solve(&y, 1e-12).unwrap();
    let pred = with_intercept(test) * beta;
    let mean = test.y.iter().sum::<f64>() / test.y.len() as f64;
    let ss_res: f64 = test.y.iter().zip(pred.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let ss_tot: f64 = test.y.iter().map(|a| (a - mean).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

#[test]
fn larger_shift_lowers_cross_dataset_r2() {
    let shifts = [0.0, 0.02, 0.05, 0.1, 0.2, 0.3];
    let mut r2 = Vec::new();
    for &a in &shifts {
        let dir = tempfile::tempdir().unwrap();
        let spec = SynthSpec::new(vec![300, 300], vec![0.0, a]);
        generate_synthetic_benchmark(&spec, 11, dir.path()).unwrap();
        let index = BenchmarkIndex::load(dir.path()).unwrap();
        r2.push(ols_r2(&design(&index, "synth0"), &design(&index, "synth1")));
    }
    assert!(r2[0] > 0.9, "{r2:?}");
    assert!(r2.windows(2).all(|w| w[0] > w[1]), "{r2:?}");
}

#[test]
fn zero_shifts_share_one_distribution() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec::new(vec![300, 300], vec![0.0, 0.0]);
    generate_synthetic_benchmark(&spec, 5, dir.path()).unwrap();
    let index = BenchmarkIndex::load(dir.path()).unwrap();
    let (a, b) = (design(&index, "synth0"), design(&index, "synth1"));
    assert!((ols_r2(&a, &b) - ols_r2(&b, &a)).abs() < 0.05);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!((mean(&a.y) - mean(&b.y)).abs() < 0.02);
}
