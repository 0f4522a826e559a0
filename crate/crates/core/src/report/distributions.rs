use std::path::Path;

use super::ReportError;
use crate::contract::{read_scores, TEST_SCORES};
use crate::scheduler::RunPlan;

pub const DISTRIBUTION_COLUMNS: [&str; 6] = ["model", "source", "target", "split", "metric", "value"];

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionRow {
    pub model: String,
    pub source: String,
    pub target: String,
    pub split: usize,
    pub metric: String,
    pub value: f64,
}

/// An entry left out of the export, with why.
#[derive(Debug, Clone, PartialEq)]
pub struct MissingEntry {
    pub model: String,
    pub source: String,
    pub target: String,
    pub split: usize,
    pub metric: String,
    pub reason: String,
}

/// Every (model, source, target, split, metric) score of the run. Entries
/// without a usable score are returned separately.
pub fn export_distributions(
    rundir: &Path,
    metrics: &[String],
) -> Result<(Vec<DistributionRow>, Vec<MissingEntry>), ReportError> {
    let plan = RunPlan::load(rundir)?;
    let (mut rows, mut missing) = (Vec::new(), Vec::new());
    for m in &plan.models {
        for s in &plan.datasets {
            for t in &plan.datasets {
                for n in 0..plan.n_splits {
                    let path = rundir.join(plan.infer_dir(&m.name, s, t, n)).join(TEST_SCORES);
                    let scores = read_scores(&path);
                    for metric in metrics {
                        let base = (m.name.clone(), s.clone(), t.clone(), n, metric.clone());
                        let value = match &scores {
                            Ok(sc) => sc.metric(metric).ok_or_else(|| {
                                sc.null_reason.clone().unwrap_or_else(|| "null-metric".to_string())
                            }),
                            Err(e) => Err(format!("missing-scores: {}", e.class())),
                        };
                        match value {
                            Ok(value) => rows.push(DistributionRow {
                                model: base.0,
                                source: base.1,
                                target: base.2,
                                split: base.3,
                                metric: base.4,
                                value,
                            }),
                            Err(reason) => missing.push(MissingEntry {
                                model: base.0,
                                source: base.1,
                                target: base.2,
                                split: base.3,
                                metric: base.4,
                                reason,
                            }),
                        }
                    }
                }
            }
        }
    }
    Ok((rows, missing))
}

pub fn distributions_csv(rows: &[DistributionRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(DISTRIBUTION_COLUMNS).expect("in-memory write");
    for r in rows {
        let split = r.split.to_string();
        let value = r.value.to_string();
        w.write_record([&r.model, &r.source, &r.target, &split, &r.metric, &value])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub fn missing_csv(rows: &[MissingEntry]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "source", "target", "split", "metric", "reason"]).expect("in-memory write");
    for r in rows {
        let split = r.split.to_string();
        w.write_record([&r.model, &r.source, &r.target, &split, &r.metric, &r.reason])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_columns() {
        let r = DistributionRow {
            model: "ridge".into(),
            source: "A".into(),
            target: "B".into(),
            split: 2,
            metric: "r2".into(),
            value: 0.5,
        };
        assert_eq!(distributions_csv(&[r]), "model,source,target,split,metric,value\nridge,A,B,2,r2,0.5\n");
        assert_eq!(missing_csv(&[]), "model,source,target,split,metric,reason\n");
    }
}
