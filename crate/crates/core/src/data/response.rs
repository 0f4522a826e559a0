use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{fmt_f64, DataError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRow {
    pub cell_id: String,
    pub drug_id: String,
    pub auc: f64,
}

/// Response table rows in file order. Row `i` is the row addressed by index
/// `i` in split files.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResponseTable {
    pub path: PathBuf,
    pub rows: Vec<ResponseRow>,
}

impl ResponseTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn auc(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.auc).collect()
    }
}

pub fn load_response_table(path: impl AsRef<Path>) -> Result<ResponseTable, DataError> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(DataError::csv(path))?;
    let headers = rdr.headers().map_err(DataError::csv(path))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })
    };
    let (ci, di, ai) = (col("cell_id")?, col("drug_id")?, col("auc")?);

    let mut rows = Vec::new();
    let mut seen: HashMap<(String, String), u64> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(DataError::csv(path))?;
        let line = rec.position().map_or(0, |p| p.line());
        let invalid = |message: String| DataError::InvalidRow {
            path: path.to_path_buf(),
            line,
            message,
        };
        let cell_id = rec.get(ci).unwrap_or_default().to_string();
        let drug_id = rec.get(di).unwrap_or_default().to_string();
        let auc: f64 = rec
            .get(ai)
            .unwrap_or_default()
            .parse()
            .map_err(|e| invalid(format!("auc: {e}")))?;
        if !auc.is_finite() {
            return Err(invalid(format!("auc must be finite, got {auc}")));
        }
        if seen.insert((cell_id.clone(), drug_id.clone()), line).is_some() {
            return Err(DataError::DuplicatePairWithinDataset {
                path: path.to_path_buf(),
                cell_id,
                drug_id,
                line,
            });
        }
        rows.push(ResponseRow {
            cell_id,
            drug_id,
            auc,
        });
    }
    Ok(ResponseTable {
        path: path.to_path_buf(),
        rows,
    })
}

pub fn write_response_table(path: impl AsRef<Path>, rows: &[ResponseRow]) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(DataError::csv(path))?;
    w.write_record(["cell_id", "drug_id", "auc"])
        .map_err(DataError::csv(path))?;
    for r in rows {
        w.write_record([r.cell_id.as_str(), r.drug_id.as_str(), &fmt_f64(r.auc)])
            .map_err(DataError::csv(path))?;
    }
    w.flush().map_err(DataError::io(path))?;
    Ok(())
}
