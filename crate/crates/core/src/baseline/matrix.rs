use std::fs;
use std::path::Path;

use super::BaselineError;

/// File inside each `<part>_data` directory.
pub const PARTITION_FILE: &str = "data.csv";

const ID_COLUMNS: [&str; 4] = ["sample_id", "cell_id", "drug_id", "auc"];

/// One preprocessed partition: ids, targets and a row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionData {
    pub sample_ids: Vec<String>,
    pub cell_ids: Vec<String>,
    pub drug_ids: Vec<String>,
    pub y: Vec<f64>,
    pub feature_names: Vec<String>,
    pub x: Vec<f64>,
}

impl PartitionData {
    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_cols(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.x[i * p..(i + 1) * p]
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> BaselineError {
    BaselineError::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Write `dir/data.csv` with `sample_id,cell_id,drug_id,auc` followed by one
/// column per feature.
pub fn write_partition(dir: &Path, data: &PartitionData) -> Result<(), BaselineError> {
    fs::create_dir_all(dir).map_err(|e| format_err(dir, e.to_string()))?;
    let path = dir.join(PARTITION_FILE);
    let err = |e: csv::Error| format_err(&path, e.to_string());
    let mut w = csv::Writer::from_path(&path).map_err(err)?;
    let header: Vec<&str> = ID_COLUMNS
        .iter()
        .copied()
        .chain(data.feature_names.iter().map(String::as_str))
        .collect();
    w.write_record(&header).map_err(err)?;
    for i in 0..data.n_rows() {
        let mut rec = vec![
            data.sample_ids[i].clone(),
            data.cell_ids[i].clone(),
            data.drug_ids[i].clone(),
            format!("{:.16e}", data.y[i]),
        ];
        rec.extend(data.row(i).iter().map(|v| format!("{v:.16e}")));
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| format_err(&path, e.to_string()))
}

pub fn read_partition(dir: &Path) -> Result<PartitionData, BaselineError> {
    let path = dir.join(PARTITION_FILE);
    if !path.is_file() {
        return Err(format_err(&path, "partition file missing"));
    }
    let err = |e: csv::Error| format_err(&path, e.to_string());
    let mut r = csv::Reader::from_path(&path).map_err(err)?;
    let header = r.headers().map_err(err)?.clone();
    if header.len() < 4 || header.iter().take(4).ne(ID_COLUMNS) {
        return Err(format_err(&path, "header must start with sample_id,cell_id,drug_id,auc"));
    }
    let mut d = PartitionData {
        sample_ids: vec![],
        cell_ids: vec![],
        drug_ids: vec![],
        y: vec![],
        feature_names: header.iter().skip(4).map(str::to_string).collect(),
        x: vec![],
    };
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(err)?;
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| format_err(&path, format!("line {}: `{s}` is not a number", i + 2)))
        };
        d.sample_ids.push(rec[0].to_string());
        d.cell_ids.push(rec[1].to_string());
        d.drug_ids.push(rec[2].to_string());
        d.y.push(num(&rec[3])?);
        for v in rec.iter().skip(4) {
            d.x.push(num(v)?);
        }
    }
    Ok(d)
}
