//! Heatmaps, within-dataset tables and per-split exports for a finished run.

mod distributions;
mod heatmap;
mod tables;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::data::BenchmarkIndex;
use crate::metrics::{load_tensor, summarize_across, GMatrices, StdKind};
use crate::scheduler::RunPlan;

pub use distributions::{
    distributions_csv, export_distributions, missing_csv, DistributionRow, MissingEntry, DISTRIBUTION_COLUMNS,
};
pub use heatmap::{annotation, color_step, render_heatmap, ColorScale, HeatmapSpec, BLUES, GREENS};
pub use tables::{order_by_size, reorder, table_csv, table_markdown, MEAN_DECIMALS, VALUE_DECIMALS};

pub const DISTRIBUTIONS_FILE: &str = "distributions.csv";
pub const MISSING_FILE: &str = "distributions_missing.csv";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("shape: {0}")]
    Shape(String),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error(transparent)]
    Scheduler(#[from] crate::scheduler::SchedulerError),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Fixed-point formatting that never prints a negative zero.
pub fn fmt_fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// G heatmap with parenthesized std, on the blue ramp.
pub fn g_heatmap(g: &GMatrices) -> HeatmapSpec {
    HeatmapSpec {
        title: format!("G ({}, {})", g.model, g.metric),
        row_labels: g.datasets.clone(),
        col_labels: g.datasets.clone(),
        values: g.g_mean.clone(),
        std: Some(g.g_std.clone()),
        scale: ColorScale::SequentialBlue,
        decimals: VALUE_DECIMALS,
    }
}

/// Gn heatmap on the green ramp.
pub fn gn_heatmap(g: &GMatrices) -> HeatmapSpec {
    HeatmapSpec {
        title: format!("Gn ({}, {})", g.model, g.metric),
        row_labels: g.datasets.clone(),
        col_labels: g.datasets.clone(),
        values: g.gn.clone(),
        std: None,
        scale: ColorScale::SequentialGreen,
        decimals: VALUE_DECIMALS,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOutput {
    pub files: Vec<PathBuf>,
    pub missing: usize,
}

/// Write every report artifact of the run into `out`.
pub fn write_report(rundir: &Path, out: &Path, metric: &str) -> Result<ReportOutput, ReportError> {
    let plan = RunPlan::load(rundir)?;
    fs::create_dir_all(out).map_err(|source| ReportError::Io { path: out.to_path_buf(), source })?;
    let mut files = Vec::new();
    let mut put = |name: String, body: String| -> Result<(), ReportError> {
        let path = out.join(name);
        fs::write(&path, body).map_err(|source| ReportError::Io { path: path.clone(), source })?;
        files.push(path);
        Ok(())
    };

    let mut all = Vec::new();
    for m in &plan.models {
        let g = GMatrices::from_tensor(&load_tensor(rundir, &m.name, metric)?, StdKind::Population);
        put(format!("heatmap_G_{}.svg", m.name), render_heatmap(&g_heatmap(&g))?)?;
        put(format!("heatmap_Gn_{}.svg", m.name), render_heatmap(&gn_heatmap(&g))?)?;
        all.push(g);
    }

    let index = BenchmarkIndex::load(&plan.benchmark_root)?;
    let sizes: BTreeMap<String, usize> = index.datasets.iter().map(|d| (d.name.clone(), d.n_samples)).collect();
    let order = order_by_size(&plan.datasets, &sizes);
    let summary = summarize_across(&all)?;
    let (mean, std) = if all.is_empty() {
        let empty = crate::metrics::SummaryTable::new(Vec::new(), order.clone(), Vec::new());
        (empty.clone(), empty)
    } else {
        (reorder(&summary.within_mean, &order), reorder(&summary.within_std, &order))
    };
    put("within_dataset_mean.csv".into(), table_csv(&mean))?;
    put("within_dataset_mean.md".into(), table_markdown(&mean))?;
    put("within_dataset_std.csv".into(), table_csv(&std))?;
    put("within_dataset_std.md".into(), table_markdown(&std))?;

    let (rows, missing) = export_distributions(rundir, &[metric.to_string()])?;
    put(DISTRIBUTIONS_FILE.into(), distributions_csv(&rows))?;
    put(MISSING_FILE.into(), missing_csv(&missing))?;
    Ok(ReportOutput { files, missing: missing.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_negative_zero() {
        assert_eq!(fmt_fixed(-0.0004, 3), "0.000");
        assert_eq!(fmt_fixed(-0.0006, 3), "-0.001");
        assert_eq!(fmt_fixed(0.75222, 3), "0.752");
        assert_eq!(fmt_fixed(0.75225, 4), "0.7522");
    }
}
