use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{fmt_f64, DataError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Cell,
    Drug,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Cell => "cell",
            EntityKind::Drug => "drug",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRow {
    pub line: u64,
    pub id: String,
    pub reason: String,
}

/// Entity × feature matrix. Row `i` belongs to `ids[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub entity_kind: EntityKind,
    pub feature_kind: String,
    pub ids: Vec<String>,
    pub feature_names: Vec<String>,
    /// Row-major, `ids.len() * feature_names.len()` values.
    pub values: Vec<f64>,
    pub rejected: Vec<RejectedRow>,
}

impl FeatureTable {
    pub fn n_entities(&self) -> usize {
        self.ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_features();
        &self.values[i * w..(i + 1) * w]
    }
}

/// Fixed widths implied by a feature kind name, e.g. `ecfp-512`.
fn expected_width(feature_kind: &str) -> Option<usize> {
    feature_kind
        .strip_prefix("ecfp-")
        .and_then(|n| n.parse().ok())
}

pub fn load_feature_table(
    path: impl AsRef<Path>,
    entity_kind: EntityKind,
    feature_kind: &str,
) -> Result<FeatureTable, DataError> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(DataError::csv(path))?;
    let headers = rdr.headers().map_err(DataError::csv(path))?.clone();
    if headers.is_empty() {
        return Err(DataError::EmptyTable(path.to_path_buf()));
    }
    let feature_names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if let Some(w) = expected_width(feature_kind) {
        if feature_names.len() != w {
            return Err(DataError::SchemaMismatch(format!(
                "{}: feature kind `{feature_kind}` needs {w} columns, found {}",
                path.display(),
                feature_names.len()
            )));
        }
    }

    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut rejected = Vec::new();
    let mut seen = HashSet::new();
    let mut total = 0usize;
    for rec in rdr.records() {
        let rec = rec.map_err(DataError::csv(path))?;
        total += 1;
        let line = rec.position().map_or(0, |p| p.line());
        let id = rec.get(0).unwrap_or_default().to_string();
        let reject = |reason: String| RejectedRow {
            line,
            id: id.clone(),
            reason,
        };
        if rec.len() != headers.len() {
            rejected.push(reject(format!(
                "expected {} fields, found {}",
                headers.len(),
                rec.len()
            )));
            continue;
        }
        let parsed: Result<Vec<f64>, String> = rec
            .iter()
            .skip(1)
            .zip(&feature_names)
            .map(|(v, name)| match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                Ok(x) => Err(format!("{name}: non-finite value {x}")),
                Err(_) => Err(format!("{name}: not a number `{v}`")),
            })
            .collect();
        match parsed {
            Ok(row) => {
                if !seen.insert(id.clone()) {
                    return Err(DataError::DuplicateEntity {
                        path: path.to_path_buf(),
                        id,
                    });
                }
                ids.push(id);
                values.extend(row);
            }
            Err(reason) => rejected.push(reject(reason)),
        }
    }
    if total == 0 {
        return Err(DataError::EmptyTable(path.to_path_buf()));
    }
    if ids.is_empty() {
        return Err(DataError::AllRowsRejected {
            path: path.to_path_buf(),
            rejected: rejected.len(),
        });
    }
    Ok(FeatureTable {
        entity_kind,
        feature_kind: feature_kind.to_string(),
        ids,
        feature_names,
        values,
        rejected,
    })
}

pub fn write_feature_table(path: impl AsRef<Path>, table: &FeatureTable) -> Result<(), DataError> {
    let path: PathBuf = path.as_ref().to_path_buf();
    let mut w = csv::Writer::from_path(&path).map_err(DataError::csv(&path))?;
    let id_col = format!("{}_id", table.entity_kind);
    let mut header = vec![id_col.as_str()];
    header.extend(table.feature_names.iter().map(String::as_str));
    w.write_record(&header).map_err(DataError::csv(&path))?;
    for (i, id) in table.ids.iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend(table.row(i).iter().map(|&x| fmt_f64(x)));
        w.write_record(&rec).map_err(DataError::csv(&path))?;
    }
    w.flush().map_err(DataError::io(&path))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(body: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, body).unwrap();
        (dir, p)
    }

    #[test]
    fn toy_two_by_three() {
        let (_d, p) = file("cell_id,g1,g2,g3\nc1,1,2,3\nc2,4,5,6\n");
        let t = load_feature_table(&p, EntityKind::Cell, "gene-expression").unwrap();
        assert_eq!((t.n_entities(), t.n_features()), (2, 3));
        assert_eq!(t.row(1), &[4.0, 5.0, 6.0]);
        assert!(t.rejected.is_empty());
    }

    #[test]
    fn non_numeric_row_rejected() {
        let (_d, p) = file("cell_id,g1,g2\nc1,1,2\nc2,x,5\nc3,nan,1\nc4,3\n");
        let t = load_feature_table(&p, EntityKind::Cell, "ge").unwrap();
        assert_eq!(t.ids, vec!["c1"]);
        assert_eq!(t.rejected.len(), 3);
        assert_eq!(t.rejected[0].line, 3);
        assert_eq!(t.rejected[1].id, "c3");
    }

    #[test]
    fn empty_and_all_rejected() {
        let (_d, p) = file("cell_id,g1\n");
        assert!(matches!(
            load_feature_table(&p, EntityKind::Cell, "ge"),
            Err(DataError::EmptyTable(_))
        ));
        let (_d, p) = file("cell_id,g1\nc1,oops\n");
        assert!(matches!(
            load_feature_table(&p, EntityKind::Cell, "ge"),
            Err(DataError::AllRowsRejected { rejected: 1, .. })
        ));
    }

    #[test]
    fn ecfp_width_checked() {
        let header: Vec<String> = (0..511).map(|i| format!("b{i}")).collect();
        let (_d, p) = file(&format!("drug_id,{}\n", header.join(",")));
        assert!(matches!(
            load_feature_table(&p, EntityKind::Drug, "ecfp-512"),
            Err(DataError::SchemaMismatch(_))
        ));
        let header: Vec<String> = (0..512).map(|i| format!("b{i}")).collect();
        let row = vec!["0"; 512].join(",");
        let (_d, p) = file(&format!("drug_id,{}\nd1,{row}\n", header.join(",")));
        let t = load_feature_table(&p, EntityKind::Drug, "ecfp-512").unwrap();
        assert_eq!(t.n_features(), 512);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let (_d, p) = file("drug_id,f\nd1,1\nd1,2\n");
        assert!(matches!(
            load_feature_table(&p, EntityKind::Drug, "desc"),
            Err(DataError::DuplicateEntity { .. })
        ));
    }
}
