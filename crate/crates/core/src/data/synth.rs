//! Desk-scale synthetic benchmarks with a planted signal.
//!
//! Every dataset shares one pool of cells and drugs and one pair of weight
//! vectors. A response is `clip(σ(w·x_cell + v·x_drug) + shift_k + ε, 0, 1)`
//! where `shift_k` is the dataset's shift amplitude and `ε ~ N(0, noise_sd²)`.
//! Random draws do not depend on the shift values, so two specs that differ
//! only in shifts produce the same features, pairs and noise.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{
    generate_splits, write_feature_table, write_response_table, write_split_files, BenchmarkIndex,
    DataError, DatasetDescriptor, DirLock, EntityKind, FeatureTable, ResponseRow,
};

pub const CELL_KIND: &str = "expr";
pub const DRUG_KIND: &str = "desc";

fn default_n_splits() -> usize {
    10
}

fn default_scale() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_datasets: usize,
    pub sizes: Vec<usize>,
    pub n_cell_features: usize,
    pub n_drug_features: usize,
    pub shift_amplitudes: Vec<f64>,
    #[serde(default)]
    pub noise_sd: f64,
    /// Standard deviation of the linear predictor before the sigmoid.
    #[serde(default = "default_scale")]
    pub signal_scale: f64,
    #[serde(default)]
    pub n_cells: Option<usize>,
    #[serde(default)]
    pub n_drugs: Option<usize>,
    #[serde(default = "default_n_splits")]
    pub n_splits: usize,
    #[serde(default)]
    pub names: Option<Vec<String>>,
}

impl SynthSpec {
    pub fn new(sizes: Vec<usize>, shift_amplitudes: Vec<f64>) -> Self {
        Self {
            n_datasets: sizes.len(),
            sizes,
            n_cell_features: 8,
            n_drug_features: 4,
            shift_amplitudes,
            noise_sd: 0.0,
            signal_scale: default_scale(),
            n_cells: None,
            n_drugs: None,
            n_splits: 10,
            names: None,
        }
    }

    fn validate(&self) -> Result<(), DataError> {
        let bad = |m: String| Err(DataError::InvalidSpec(m));
        if self.n_datasets == 0 {
            return bad("n_datasets must be positive".into());
        }
        if self.sizes.len() != self.n_datasets || self.shift_amplitudes.len() != self.n_datasets {
            return bad(format!(
                "sizes ({}) and shift_amplitudes ({}) must both have n_datasets = {} entries",
                self.sizes.len(),
                self.shift_amplitudes.len(),
                self.n_datasets
            ));
        }
        if self.sizes.contains(&0) || self.n_cell_features == 0 || self.n_drug_features == 0 {
            return bad("sizes and feature counts must be positive".into());
        }
        if !(self.noise_sd >= 0.0) || !self.shift_amplitudes.iter().all(|s| s.is_finite()) {
            return bad("noise_sd must be non-negative and shifts finite".into());
        }
        if let Some(names) = &self.names {
            if names.len() != self.n_datasets {
                return bad("names must have n_datasets entries".into());
            }
        }
        Ok(())
    }

    fn pool_sizes(&self) -> (usize, usize) {
        let max = *self.sizes.iter().max().unwrap_or(&1);
        let side = ((2 * max) as f64).sqrt().ceil() as usize + 1;
        (self.n_cells.unwrap_or(side), self.n_drugs.unwrap_or(side))
    }

    pub fn dataset_names(&self) -> Vec<String> {
        self.names
            .clone()
            .unwrap_or_else(|| (0..self.n_datasets).map(|k| format!("synth{k}")).collect())
    }
}

/// Ground truth recorded next to the generated files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub seed: u64,
    pub spec: SynthSpec,
    pub cell_weights: Vec<f64>,
    pub drug_weights: Vec<f64>,
    pub datasets: Vec<String>,
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize, sd: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * sd
        })
        .collect()
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Write a synthetic benchmark under `out`: per-dataset response, feature and
/// split files, `benchmark.json`, and `synth_manifest.json`.
pub fn generate_synthetic_benchmark(
    spec: &SynthSpec,
    seed: u64,
    out: impl AsRef<Path>,
) -> Result<SynthManifest, DataError> {
    spec.validate()?;
    let out = out.as_ref();
    fs::create_dir_all(out).map_err(DataError::io(out))?;
    let _lock = DirLock::acquire(out)?;

    let (n_cells, n_drugs) = spec.pool_sizes();
    if let Some(&too_big) = spec.sizes.iter().find(|&&s| s > n_cells * n_drugs) {
        return Err(DataError::InvalidSpec(format!(
            "size {too_big} exceeds the {n_cells}×{n_drugs} available pairs"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = (spec.n_cell_features + spec.n_drug_features) as f64;
    let w_sd = spec.signal_scale / p.sqrt();
    let cell_weights = normal_vec(&mut rng, spec.n_cell_features, w_sd);
    let drug_weights = normal_vec(&mut rng, spec.n_drug_features, w_sd);
    let cell_x = normal_vec(&mut rng, n_cells * spec.n_cell_features, 1.0);
    let drug_x = normal_vec(&mut rng, n_drugs * spec.n_drug_features, 1.0);

    let dot = |x: &[f64], w: &[f64]| x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
    let cell_score: Vec<f64> = cell_x
        .chunks(spec.n_cell_features)
        .map(|x| dot(x, &cell_weights))
        .collect();
    let drug_score: Vec<f64> = drug_x
        .chunks(spec.n_drug_features)
        .map(|x| dot(x, &drug_weights))
        .collect();

    let cell_ids: Vec<String> = (0..n_cells).map(|i| format!("CELL{i:04}")).collect();
    let drug_ids: Vec<String> = (0..n_drugs).map(|i| format!("DRUG{i:04}")).collect();
    let cell_table = FeatureTable {
        entity_kind: EntityKind::Cell,
        feature_kind: CELL_KIND.into(),
        ids: cell_ids.clone(),
        feature_names: (0..spec.n_cell_features).map(|i| format!("g{i}")).collect(),
        values: cell_x,
        rejected: vec![],
    };
    let drug_table = FeatureTable {
        entity_kind: EntityKind::Drug,
        feature_kind: DRUG_KIND.into(),
        ids: drug_ids.clone(),
        feature_names: (0..spec.n_drug_features).map(|i| format!("m{i}")).collect(),
        values: drug_x,
        rejected: vec![],
    };

    let names = spec.dataset_names();
    let mut descriptors = Vec::new();
    for (k, name) in names.iter().enumerate() {
        let mut drng = ChaCha8Rng::seed_from_u64(seed);
        drng.set_stream(k as u64 + 1);
        let mut pairs: Vec<usize> = (0..n_cells * n_drugs).collect();
        pairs.shuffle(&mut drng);
        pairs.truncate(spec.sizes[k]);
        let noise = normal_vec(&mut drng, spec.sizes[k], spec.noise_sd);

        let rows: Vec<ResponseRow> = pairs
            .iter()
            .zip(&noise)
            .map(|(&pair, eps)| {
                let (c, d) = (pair / n_drugs, pair % n_drugs);
                let auc = sigmoid(cell_score[c] + drug_score[d]) + spec.shift_amplitudes[k] + eps;
                ResponseRow {
                    cell_id: cell_ids[c].clone(),
                    drug_id: drug_ids[d].clone(),
                    auc: auc.clamp(0.0, 1.0),
                }
            })
            .collect();

        let desc = DatasetDescriptor::standard(name, &[CELL_KIND], &[DRUG_KIND], rows.len());
        let ds_dir = out.join(name);
        let feat_dir = ds_dir.join("features");
        fs::create_dir_all(&feat_dir).map_err(DataError::io(&feat_dir))?;
        write_response_table(out.join(&desc.response_path), &rows)?;
        write_feature_table(out.join(&desc.omics_paths[CELL_KIND]), &cell_table)?;
        write_feature_table(out.join(&desc.drug_feature_paths[DRUG_KIND]), &drug_table)?;
        let splits = generate_splits(rows.len(), spec.n_splits, seed)?;
        write_split_files(&splits, name, ds_dir.join("splits"))?;
        descriptors.push(desc);
    }

    BenchmarkIndex::new(out, descriptors)?.save()?;
    let manifest = SynthManifest {
        seed,
        spec: spec.clone(),
        cell_weights,
        drug_weights,
        datasets: names,
    };
    let mpath: PathBuf = out.join("synth_manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(DataError::json(&mpath))?;
    fs::write(&mpath, text + "\n").map_err(DataError::io(&mpath))?;
    Ok(manifest)
}
