use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{DataError, EntityKind, FeatureTable, ResponseRow};

/// Ordered feature kinds a model consumes. Cell kinds come first in the
/// design matrix, then drug kinds, each in the listed order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSelection {
    #[serde(default)]
    pub cell: Vec<String>,
    #[serde(default)]
    pub drug: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub feature_names: Vec<String>,
    pub n_rows: usize,
    /// Row-major `n_rows × feature_names.len()`.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl DesignMatrix {
    pub fn n_cols(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_cols();
        &self.x[i * w..(i + 1) * w]
    }
}

fn pick<'a>(
    tables: &'a [FeatureTable],
    entity: EntityKind,
    kinds: &[String],
) -> Result<Vec<(&'a FeatureTable, HashMap<&'a str, usize>)>, DataError> {
    kinds
        .iter()
        .map(|k| {
            let t = tables
                .iter()
                .find(|t| t.feature_kind == *k && t.entity_kind == entity)
                .ok_or_else(|| {
                    DataError::SchemaMismatch(format!("no {entity} feature table of kind `{k}`"))
                })?;
            let index = t.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
            Ok((t, index))
        })
        .collect()
}

/// Build the design matrix: row `i` is the selected cell features of
/// `rows[i].cell_id` followed by the selected drug features of
/// `rows[i].drug_id`. Fails before building anything if any identifier is
/// missing, listing every missing one.
pub fn join_features(
    rows: &[ResponseRow],
    cell_tables: &[FeatureTable],
    drug_tables: &[FeatureTable],
    selection: &FeatureSelection,
) -> Result<DesignMatrix, DataError> {
    let cells = pick(cell_tables, EntityKind::Cell, &selection.cell)?;
    let drugs = pick(drug_tables, EntityKind::Drug, &selection.drug)?;

    let mut missing = BTreeSet::new();
    for r in rows {
        for (t, idx) in &cells {
            if !idx.contains_key(r.cell_id.as_str()) {
                missing.insert(format!("cell:{} ({})", r.cell_id, t.feature_kind));
            }
        }
        for (t, idx) in &drugs {
            if !idx.contains_key(r.drug_id.as_str()) {
                missing.insert(format!("drug:{} ({})", r.drug_id, t.feature_kind));
            }
        }
    }
    if !missing.is_empty() {
        return Err(DataError::UnknownEntity {
            missing: missing.into_iter().collect(),
        });
    }

    let feature_names: Vec<String> = cells
        .iter()
        .chain(&drugs)
        .flat_map(|(t, _)| t.feature_names.iter().map(move |n| format!("{}.{n}", t.feature_kind)))
        .collect();
    let mut x = Vec::with_capacity(rows.len() * feature_names.len());
    for r in rows {
        for (t, idx) in &cells {
            x.extend_from_slice(t.row(idx[r.cell_id.as_str()]));
        }
        for (t, idx) in &drugs {
            x.extend_from_slice(t.row(idx[r.drug_id.as_str()]));
        }
    }
    Ok(DesignMatrix {
        feature_names,
        n_rows: rows.len(),
        x,
        y: rows.iter().map(|r| r.auc).collect(),
    })
}
