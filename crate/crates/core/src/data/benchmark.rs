use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{load_feature_table, load_response_table, DataError, EntityKind, FeatureTable, ResponseTable};

/// File name of the descriptor index at the benchmark root.
pub const BENCHMARK_INDEX: &str = "benchmark.json";

/// One dataset in a benchmark. Paths are relative to the benchmark root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    pub name: String,
    pub response_path: PathBuf,
    /// Cell feature kind → table path.
    #[serde(default)]
    pub omics_paths: BTreeMap<String, PathBuf>,
    /// Drug feature kind → table path.
    #[serde(default)]
    pub drug_feature_paths: BTreeMap<String, PathBuf>,
    pub n_samples: usize,
}

impl DatasetDescriptor {
    /// Descriptor following the standard layout
    /// `<name>/response.csv`, `<name>/features/<entity>_<kind>.csv`.
    pub fn standard(name: &str, cell_kinds: &[&str], drug_kinds: &[&str], n_samples: usize) -> Self {
        let feat = |e: EntityKind, k: &str| PathBuf::from(name).join("features").join(format!("{e}_{k}.csv"));
        Self {
            name: name.to_string(),
            response_path: PathBuf::from(name).join("response.csv"),
            omics_paths: cell_kinds.iter().map(|k| (k.to_string(), feat(EntityKind::Cell, k))).collect(),
            drug_feature_paths: drug_kinds.iter().map(|k| (k.to_string(), feat(EntityKind::Drug, k))).collect(),
            n_samples,
        }
    }

    pub fn feature_paths(&self, entity: EntityKind) -> &BTreeMap<String, PathBuf> {
        match entity {
            EntityKind::Cell => &self.omics_paths,
            EntityKind::Drug => &self.drug_feature_paths,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkIndex {
    #[serde(skip)]
    pub root: PathBuf,
    pub datasets: Vec<DatasetDescriptor>,
}

impl BenchmarkIndex {
    pub fn new(root: impl Into<PathBuf>, datasets: Vec<DatasetDescriptor>) -> Result<Self, DataError> {
        let idx = Self {
            root: root.into(),
            datasets,
        };
        idx.check_names()?;
        Ok(idx)
    }

    fn check_names(&self) -> Result<(), DataError> {
        let mut seen = HashSet::new();
        for d in &self.datasets {
            if !seen.insert(d.name.as_str()) {
                return Err(DataError::SchemaMismatch(format!(
                    "dataset name `{}` appears twice in the benchmark",
                    d.name
                )));
            }
        }
        Ok(())
    }

    pub fn load(root: impl AsRef<Path>) -> Result<Self, DataError> {
        let root = root.as_ref();
        let path = root.join(BENCHMARK_INDEX);
        let text = fs::read_to_string(&path).map_err(DataError::io(&path))?;
        let mut idx: Self = serde_json::from_str(&text).map_err(DataError::json(&path))?;
        idx.root = root.to_path_buf();
        idx.check_names()?;
        Ok(idx)
    }

    pub fn save(&self) -> Result<(), DataError> {
        fs::create_dir_all(&self.root).map_err(DataError::io(&self.root))?;
        let path = self.root.join(BENCHMARK_INDEX);
        let text = serde_json::to_string_pretty(self).map_err(DataError::json(&path))?;
        fs::write(&path, text + "\n").map_err(DataError::io(&path))
    }

    pub fn dataset(&self, name: &str) -> Result<&DatasetDescriptor, DataError> {
        self.datasets
            .iter()
            .find(|d| d.name == name)
            .ok_or_else(|| DataError::UnknownDataset(name.to_string()))
    }

    pub fn names(&self) -> Vec<String> {
        self.datasets.iter().map(|d| d.name.clone()).collect()
    }

    pub fn split_dir(&self, name: &str) -> PathBuf {
        self.root.join(name).join("splits")
    }

    pub fn response_path(&self, name: &str) -> Result<PathBuf, DataError> {
        Ok(self.root.join(&self.dataset(name)?.response_path))
    }

    /// Load a dataset's response table and check it against `n_samples`.
    pub fn load_response(&self, name: &str) -> Result<ResponseTable, DataError> {
        let d = self.dataset(name)?;
        let table = load_response_table(self.root.join(&d.response_path))?;
        if table.len() != d.n_samples {
            return Err(DataError::SchemaMismatch(format!(
                "dataset `{name}` declares {} samples but {} has {} rows",
                d.n_samples,
                table.path.display(),
                table.len()
            )));
        }
        Ok(table)
    }

    pub fn load_features(&self, name: &str, entity: EntityKind, kind: &str) -> Result<FeatureTable, DataError> {
        let d = self.dataset(name)?;
        let rel = d
            .feature_paths(entity)
            .get(kind)
            .ok_or_else(|| DataError::UnknownFeatureKind {
                dataset: name.to_string(),
                entity,
                kind: kind.to_string(),
            })?;
        load_feature_table(self.root.join(rel), entity, kind)
    }
}
