use std::fs;
use std::path::Path;

use super::{GMatrices, MetricsError, ScoreTensor, StdKind};
use crate::contract::{read_scores, TEST_SCORES};
use crate::scheduler::RunPlan;

/// Scores of `model` from every infer task of the run. A missing or
/// unreadable scores file, or a null metric, gives a null entry.
pub fn load_tensor(rundir: &Path, model: &str, metric: &str) -> Result<ScoreTensor, MetricsError> {
    let plan = RunPlan::load(rundir)?;
    if !plan.models.iter().any(|m| m.name == model) {
        return Err(MetricsError::UnknownModel(model.to_string()));
    }
    let mut values = Vec::new();
    for s in &plan.datasets {
        for t in &plan.datasets {
            for n in 0..plan.n_splits {
                let path = rundir.join(plan.infer_dir(model, s, t, n)).join(TEST_SCORES);
                values.push(read_scores(&path).ok().and_then(|sc| sc.metric(metric)));
            }
        }
    }
    ScoreTensor::new(model, metric, plan.datasets.clone(), plan.n_splits, values)
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn matrix_csv(datasets: &[String], m: &[Vec<Option<f64>>]) -> String {
    let mut out = format!("source,{}\n", datasets.join(","));
    for (name, row) in datasets.iter().zip(m) {
        let cells: Vec<String> = row.iter().map(|&v| cell(v)).collect();
        out.push_str(&format!("{name},{}\n", cells.join(",")));
    }
    out
}

fn vector_csv(datasets: &[String], label: &str, v: &[Option<f64>]) -> String {
    let mut out = format!("source,{label}\n");
    for (name, x) in datasets.iter().zip(v) {
        out.push_str(&format!("{name},{}\n", cell(*x)));
    }
    out
}

/// Write one model's tensor and matrices into `dir`.
pub fn write_model_metrics(dir: &Path, tensor: &ScoreTensor, g: &GMatrices) -> Result<(), MetricsError> {
    fs::create_dir_all(dir).map_err(MetricsError::io(dir))?;
    let ds = &g.datasets;
    let n_valid: Vec<Vec<Option<f64>>> =
        g.n_valid.iter().map(|r| r.iter().map(|&c| Some(c as f64)).collect()).collect();
    let files = [
        ("G_mean.csv", matrix_csv(ds, &g.g_mean)),
        ("G_std.csv", matrix_csv(ds, &g.g_std)),
        ("Ga.csv", vector_csv(ds, "Ga", &g.ga)),
        ("Gn.csv", matrix_csv(ds, &g.gn)),
        ("Gna.csv", vector_csv(ds, "Gna", &g.gna)),
        ("n_valid.csv", matrix_csv(ds, &n_valid)),
        ("tensor.json", serde_json::to_string_pretty(tensor).expect("tensor serializes") + "\n"),
        ("gmatrices.json", serde_json::to_string_pretty(g).expect("matrices serialize") + "\n"),
    ];
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(MetricsError::io(&path))?;
    }
    Ok(())
}

/// Compute and write metrics for every model of the run under
/// `out/<model>/`.
pub fn write_metrics(rundir: &Path, metric: &str, std_kind: StdKind, out: &Path) -> Result<Vec<GMatrices>, MetricsError> {
    let plan = RunPlan::load(rundir)?;
    let mut all = Vec::new();
    for m in &plan.models {
        let t = load_tensor(rundir, &m.name, metric)?;
        let g = GMatrices::from_tensor(&t, std_kind);
        write_model_metrics(&out.join(&m.name), &t, &g)?;
        all.push(g);
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let ds = vec!["A".to_string(), "B".to_string()];
        let m = vec![vec![Some(0.5), None], vec![Some(-0.25), Some(1.0)]];
        assert_eq!(matrix_csv(&ds, &m), "source,A,B\nA,0.5,\nB,-0.25,1\n");
        assert_eq!(vector_csv(&ds, "Ga", &[None, Some(0.1)]), "source,Ga\nA,\nB,0.1\n");
    }
}
