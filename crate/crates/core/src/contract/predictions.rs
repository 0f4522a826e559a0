use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ContractError;

const COLUMNS: [&str; 5] = ["sample_id", "cell_id", "drug_id", "auc_true", "auc_pred"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sample_id: String,
    pub cell_id: String,
    pub drug_id: String,
    pub auc_true: f64,
    pub auc_pred: f64,
}

fn schema(path: &Path, message: impl Into<String>) -> ContractError {
    ContractError::SchemaMismatch {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Write `sample_id,cell_id,drug_id,auc_true,auc_pred` with 17 significant
/// digits so values read back bit-identically.
pub fn write_predictions(path: impl AsRef<Path>, records: &[PredictionRecord]) -> Result<(), ContractError> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| schema(path, e.to_string()))?;
    let csv_err = |e: csv::Error| schema(path, e.to_string());
    w.write_record(COLUMNS).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.sample_id.as_str(),
            r.cell_id.as_str(),
            r.drug_id.as_str(),
            &format!("{:.16e}", r.auc_true),
            &format!("{:.16e}", r.auc_pred),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(ContractError::io(path))
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>, ContractError> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => ContractError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => schema(path, format!("{other:?}")),
    })?;
    let headers = rdr.headers().map_err(|e| schema(path, e.to_string()))?.clone();
    let mut col = [0usize; 5];
    for (slot, name) in col.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| schema(path, format!("missing column `{name}`")))?;
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| schema(path, format!("line {line}: {e}")))?;
        let field = |k: usize| rec.get(col[k]).unwrap_or("").trim();
        let num = |k: usize| -> Result<f64, ContractError> {
            field(k)
                .parse::<f64>()
                .map_err(|_| schema(path, format!("line {line}: `{}` is not a number in {}", field(k), COLUMNS[k])))
        };
        let r = PredictionRecord {
            sample_id: field(0).to_string(),
            cell_id: field(1).to_string(),
            drug_id: field(2).to_string(),
            auc_true: num(3)?,
            auc_pred: num(4)?,
        };
        if !r.auc_true.is_finite() {
            return Err(schema(path, format!("line {line}: auc_true must be finite")));
        }
        if !seen.insert(r.sample_id.clone()) {
            return Err(ContractError::DuplicateSampleId {
                path: path.to_path_buf(),
                id: r.sample_id,
            });
        }
        out.push(r);
    }
    Ok(out)
}
