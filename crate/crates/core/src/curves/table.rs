use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{compute_auc, fit_hill, CurveError, DoseResponseMeasurement, FitConfig};

/// One fitted (cell, drug) response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseSample {
    pub cell_id: String,
    pub drug_id: String,
    pub auc: f64,
    pub r2_fit: f64,
    pub source_dataset: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableConfig {
    pub fit: FitConfig,
    pub dose_lo: f64,
    pub dose_hi: f64,
    /// Worker threads used to fit pairs; 0 picks the available parallelism.
    pub workers: usize,
}

impl Default for TableConfig {
    fn default() -> Self {
        Self {
            fit: FitConfig::default(),
            dose_lo: super::AUC_DOSE_LO,
            dose_hi: super::AUC_DOSE_HI,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairError {
    pub cell_id: String,
    pub drug_id: String,
    pub error: String,
}

/// Counts and diagnostics from one table build.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitLog {
    pub dataset: String,
    /// Pairs fitted and kept.
    pub fitted: usize,
    /// Pairs fitted but below the R² threshold.
    pub rejected: usize,
    /// Pairs that could not be fitted at all.
    pub errored: usize,
    pub malformed_rows: Vec<RowError>,
    pub pair_errors: Vec<PairError>,
}

enum PairOutcome {
    Kept(ResponseSample),
    Rejected,
    Failed(String),
}

fn fit_pair(
    key: &(String, String),
    pts: &[DoseResponseMeasurement],
    dataset: &str,
    cfg: &TableConfig,
) -> PairOutcome {
    let fit = match fit_hill(pts, &cfg.fit) {
        Ok(f) => f,
        Err(e) => return PairOutcome::Failed(e.to_string()),
    };
    if !fit.accepted {
        return PairOutcome::Rejected;
    }
    match compute_auc(&fit.params, cfg.dose_lo, cfg.dose_hi) {
        Ok(auc) => PairOutcome::Kept(ResponseSample {
            cell_id: key.0.clone(),
            drug_id: key.1.clone(),
            auc,
            r2_fit: fit.r2,
            source_dataset: dataset.to_string(),
        }),
        Err(e) => PairOutcome::Failed(e.to_string()),
    }
}

/// Group measurements by pair, fit each, keep pairs passing the R² filter.
/// Output is sorted by `cell_id`, then `drug_id`.
pub fn build_response_table<I>(
    raw: I,
    dataset_name: &str,
    config: &TableConfig,
) -> (Vec<ResponseSample>, FitLog)
where
    I: IntoIterator<Item = DoseResponseMeasurement>,
{
    let mut groups: BTreeMap<(String, String), Vec<DoseResponseMeasurement>> = BTreeMap::new();
    for m in raw {
        groups
            .entry((m.cell_id.clone(), m.drug_id.clone()))
            .or_default()
            .push(m);
    }
    let pairs: Vec<_> = groups.into_iter().collect();

    let workers = match config.workers {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .min(pairs.len().max(1));
    let chunk = pairs.len().div_ceil(workers).max(1);

    let outcomes: Vec<PairOutcome> = std::thread::scope(|scope| {
        let handles: Vec<_> = pairs
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|(k, pts)| fit_pair(k, pts, dataset_name, config))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("fit worker panicked"))
            .collect()
    });

    let mut log = FitLog {
        dataset: dataset_name.to_string(),
        ..FitLog::default()
    };
    let mut samples = Vec::new();
    for ((key, _), outcome) in pairs.iter().zip(outcomes) {
        match outcome {
            PairOutcome::Kept(s) => {
                log.fitted += 1;
                samples.push(s);
            }
            PairOutcome::Rejected => log.rejected += 1,
            PairOutcome::Failed(error) => {
                log.errored += 1;
                log.pair_errors.push(PairError {
                    cell_id: key.0.clone(),
                    drug_id: key.1.clone(),
                    error,
                });
            }
        }
    }
    (samples, log)
}

/// Read raw measurements from a comma- or tab-delimited table. The
/// delimiter is taken from the header line. Malformed rows are skipped and
/// returned with their line numbers.
pub fn read_measurements<R: Read>(
    reader: R,
) -> Result<(Vec<DoseResponseMeasurement>, Vec<RowError>), CurveError> {
    let mut text = String::new();
    std::io::BufReader::new(reader).read_to_string(&mut text)?;
    let header = text.lines().next().unwrap_or("");
    let delimiter = if header.contains('\t') { b'\t' } else { b',' };

    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CurveError::MissingColumn(name.to_string()))
    };
    let (ci, di, dose_i, vi) = (col("cell_id")?, col("drug_id")?, col("dose_M")?, col("viability")?);

    let mut out = Vec::new();
    let mut bad = Vec::new();
    for rec in rdr.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                bad.push(RowError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = rec.position().map_or(0, |p| p.line());
        let parsed = (|| -> Result<DoseResponseMeasurement, String> {
            let field = |i: usize| rec.get(i).ok_or_else(|| format!("missing field {i}"));
            let cell_id = field(ci)?.to_string();
            let drug_id = field(di)?.to_string();
            if cell_id.is_empty() || drug_id.is_empty() {
                return Err("empty identifier".into());
            }
            let dose: f64 = field(dose_i)?
                .parse()
                .map_err(|e| format!("dose_M: {e}"))?;
            let viability: f64 = field(vi)?
                .parse()
                .map_err(|e| format!("viability: {e}"))?;
            if !(dose > 0.0 && dose.is_finite()) {
                return Err(format!("dose_M must be positive, got {dose}"));
            }
            if !viability.is_finite() {
                return Err(format!("viability must be finite, got {viability}"));
            }
            Ok(DoseResponseMeasurement {
                cell_id,
                drug_id,
                dose,
                viability,
            })
        })();
        match parsed {
            Ok(m) => out.push(m),
            Err(message) => bad.push(RowError { line, message }),
        }
    }
    Ok((out, bad))
}

/// Write `cell_id,drug_id,auc,r2_fit`.
pub fn write_response_table<W: Write>(
    writer: W,
    samples: &[ResponseSample],
) -> Result<(), CurveError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["cell_id", "drug_id", "auc", "r2_fit"])?;
    for s in samples {
        w.write_record([
            s.cell_id.as_str(),
            s.drug_id.as_str(),
            &format!("{:.16e}", s.auc),
            &format!("{:.16e}", s.r2_fit),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{hill_value, HillParams};

    fn pair(cell: &str, drug: &str, p: Option<HillParams>) -> Vec<DoseResponseMeasurement> {
        (0..8)
            .map(|i| {
                let dose = 10f64.powf(-10.0 + 6.0 * i as f64 / 7.0);
                DoseResponseMeasurement {
                    cell_id: cell.into(),
                    drug_id: drug.into(),
                    dose,
                    viability: p.map_or(0.8, |p| hill_value(&p, dose)),
                }
            })
            .collect()
    }

    #[test]
    fn one_good_one_degenerate() {
        let good = HillParams::new(0.1, 1e-7, 1.5).unwrap();
        let mut raw = pair("c2", "d1", None);
        raw.extend(pair("c1", "d1", Some(good)));
        let (samples, log) = build_response_table(raw, "toy", &TableConfig::default());
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].cell_id, "c1");
        assert_eq!(log.fitted, 1);
        assert_eq!(log.errored, 1);
        assert_eq!(log.rejected, 0);
        assert_eq!(log.pair_errors[0].cell_id, "c2");
    }

    #[test]
    fn empty_input() {
        let (samples, log) = build_response_table(Vec::new(), "empty", &TableConfig::default());
        assert!(samples.is_empty());
        assert_eq!((log.fitted, log.rejected, log.errored), (0, 0, 0));
    }

    #[test]
    fn output_sorted_and_worker_count_irrelevant() {
        let p = HillParams::new(0.3, 1e-6, 1.0).unwrap();
        let mut raw = Vec::new();
        for c in ["c3", "c1", "c2"] {
            for d in ["d2", "d1"] {
                raw.extend(pair(c, d, Some(p)));
            }
        }
        let serial = TableConfig {
            workers: 1,
            ..TableConfig::default()
        };
        let parallel = TableConfig {
            workers: 4,
            ..TableConfig::default()
        };
        let (a, _) = build_response_table(raw.clone(), "x", &serial);
        let (b, _) = build_response_table(raw, "x", &parallel);
        assert_eq!(a, b);
        let keys: Vec<_> = a.iter().map(|s| (s.cell_id.as_str(), s.drug_id.as_str())).collect();
        assert_eq!(
            keys,
            [("c1", "d1"), ("c1", "d2"), ("c2", "d1"), ("c2", "d2"), ("c3", "d1"), ("c3", "d2")]
        );
        assert!(a.iter().all(|s| (0.0..=1.0).contains(&s.auc) && s.r2_fit >= 0.3));
    }

    #[test]
    fn reads_tab_and_comma_and_reports_bad_rows() {
        let tsv = "cell_id\tdrug_id\tdose_M\tviability\nc1\td1\t1e-9\t0.9\nc1\td1\tabc\t0.5\nc1\td1\t-1\t0.5\n";
        let (rows, bad) = read_measurements(tsv.as_bytes()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(bad.len(), 2);
        assert_eq!(bad[0].line, 3);
        assert_eq!(bad[1].line, 4);

        let csv = "drug_id,cell_id,viability,dose_M\nd1,c1,0.9,1e-9\n";
        let (rows, bad) = read_measurements(csv.as_bytes()).unwrap();
        assert!(bad.is_empty());
        assert_eq!(rows[0].cell_id, "c1");
        assert_eq!(rows[0].dose, 1e-9);
    }

    #[test]
    fn missing_column() {
        let csv = "cell_id,drug_id,viability\nc,d,0.5\n";
        assert!(matches!(
            read_measurements(csv.as_bytes()),
            Err(CurveError::MissingColumn(c)) if c == "dose_M"
        ));
    }
}
