//! The three baseline stages and their command-line entry point.
//!
//! Preprocess writes `{train,val,test}_data/data.csv` holding standardised
//! features; the statistics come from the training rows only and are kept
//! in `train_data/stats.json`. Train writes `model/model.json` plus the
//! validation artifacts. Infer writes the test artifacts.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    read_partition, write_partition, BaselineError, KnnModel, PartitionData, RidgeModel, StandardizationStats,
    DEFAULT_K, LAMBDA_GRID,
};
use crate::contract::{
    compute_scores, resolve_params, write_predictions, write_scores, ConfigFile, ContractError, ParamKind,
    ParamSet, ParamSpec, PredictionRecord, Schema, ScoreSet, StageKind, Tier, MODEL_DIR, TEST_PREDICTIONS,
    TEST_SCORES, VAL_PREDICTIONS, VAL_SCORES,
};
use crate::data::{
    join_features, read_split_files, BenchmarkIndex, EntityKind, FeatureSelection, FeatureTable, ResponseRow,
};

pub const MODEL_FILE: &str = "model.json";
pub const STATS_FILE: &str = "stats.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Ridge,
    Knn,
}

impl BaselineKind {
    pub fn from_model_name(name: &str) -> Result<Self, ContractError> {
        match name {
            "baseline-ridge" => Ok(BaselineKind::Ridge),
            "baseline-knn" => Ok(BaselineKind::Knn),
            other => Err(ContractError::UnknownModel(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    /// Fixed penalty; `None` searches `LAMBDA_GRID` on the validation rows.
    pub lambda: Option<f64>,
    pub k: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self { lambda: None, k: DEFAULT_K }
    }
}

/// Everything infer needs, stored as `model/model.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub kind: BaselineKind,
    pub feature_names: Vec<String>,
    pub stats: StandardizationStats,
    #[serde(default)]
    pub ridge: Option<RidgeModel>,
    #[serde(default)]
    pub knn: Option<KnnModel>,
    /// Validation MSE for each searched penalty, in grid order.
    #[serde(default)]
    pub lambda_search: Vec<(f64, f64)>,
}

impl ModelFile {
    fn predict(&self, d: &PartitionData) -> Vec<f64> {
        match (&self.ridge, &self.knn) {
            (Some(r), _) => r.predict(&d.x, d.n_rows()),
            (None, Some(k)) => k.predict(&d.x, d.n_rows()),
            (None, None) => unreachable!("model file validated on load"),
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), BaselineError> {
    let text = serde_json::to_string_pretty(value).expect("plain data serializes");
    fs::write(path, text + "\n").map_err(|e| ContractError::io(path)(e).into())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, BaselineError> {
    let text = fs::read_to_string(path).map_err(ContractError::io(path))?;
    serde_json::from_str(&text).map_err(|e| BaselineError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn all_kinds(index: &BenchmarkIndex, dataset: &str, entity: EntityKind) -> Result<Vec<String>, BaselineError> {
    Ok(index.dataset(dataset)?.feature_paths(entity).keys().cloned().collect())
}

fn load_tables(
    index: &BenchmarkIndex,
    dataset: &str,
    selection: &FeatureSelection,
) -> Result<(Vec<FeatureTable>, Vec<FeatureTable>), BaselineError> {
    let load = |entity, kinds: &[String]| -> Result<Vec<FeatureTable>, BaselineError> {
        kinds
            .iter()
            .map(|k| index.load_features(dataset, entity, k).map_err(Into::into))
            .collect()
    };
    Ok((load(EntityKind::Cell, &selection.cell)?, load(EntityKind::Drug, &selection.drug)?))
}

fn partition(
    rows: &[(usize, &ResponseRow)],
    cells: &[FeatureTable],
    drugs: &[FeatureTable],
    selection: &FeatureSelection,
) -> Result<PartitionData, BaselineError> {
    let plain: Vec<ResponseRow> = rows.iter().map(|(_, r)| (*r).clone()).collect();
    let m = join_features(&plain, cells, drugs, selection)?;
    Ok(PartitionData {
        sample_ids: rows.iter().map(|(i, _)| i.to_string()).collect(),
        cell_ids: plain.iter().map(|r| r.cell_id.clone()).collect(),
        drug_ids: plain.iter().map(|r| r.drug_id.clone()).collect(),
        y: m.y,
        feature_names: m.feature_names,
        x: m.x,
    })
}

/// Build the three partitions for `(source, target, split)` under `out`.
/// Train and validation rows come from the source split. Test rows are the
/// source split's test rows when `source == target`, otherwise every row of
/// the target dataset. Sample ids are row indices into the table the rows
/// came from. Empty selection lists mean every kind the source provides.
pub fn baseline_preprocess(
    index: &BenchmarkIndex,
    source: &str,
    target: &str,
    split: usize,
    split_dir: &Path,
    selection: &FeatureSelection,
    out: &Path,
) -> Result<[PartitionData; 3], BaselineError> {
    let mut sel = selection.clone();
    if sel.cell.is_empty() {
        sel.cell = all_kinds(index, source, EntityKind::Cell)?;
    }
    if sel.drug.is_empty() {
        sel.drug = all_kinds(index, source, EntityKind::Drug)?;
    }

    let src = index.load_response(source)?;
    let s = read_split_files(split_dir, source, split, src.len())?;
    let pick = |idx: &[usize]| -> Vec<(usize, &ResponseRow)> { idx.iter().map(|&i| (i, &src.rows[i])).collect() };
    let (src_cells, src_drugs) = load_tables(index, source, &sel)?;
    let mut train = partition(&pick(&s.train), &src_cells, &src_drugs, &sel)?;
    let mut val = partition(&pick(&s.val), &src_cells, &src_drugs, &sel)?;
    let mut test = if source == target {
        partition(&pick(&s.test), &src_cells, &src_drugs, &sel)?
    } else {
        let tgt = index.load_response(target)?;
        let rows: Vec<(usize, &ResponseRow)> = tgt.rows.iter().enumerate().collect();
        let (cells, drugs) = load_tables(index, target, &sel)?;
        partition(&rows, &cells, &drugs, &sel)?
    };

    let stats = StandardizationStats::fit(&train.x, train.n_cols());
    for d in [&mut train, &mut val, &mut test] {
        stats.apply(&mut d.x);
    }
    for (name, d) in [("train_data", &train), ("val_data", &val), ("test_data", &test)] {
        write_partition(&out.join(name), d)?;
    }
    write_json(&out.join("train_data").join(STATS_FILE), &stats)?;
    Ok([train, val, test])
}

fn records(d: &PartitionData, pred: &[f64]) -> Vec<PredictionRecord> {
    (0..d.n_rows())
        .map(|i| PredictionRecord {
            sample_id: d.sample_ids[i].clone(),
            cell_id: d.cell_ids[i].clone(),
            drug_id: d.drug_ids[i].clone(),
            auc_true: d.y[i],
            auc_pred: pred[i],
        })
        .collect()
}

fn mse(y: &[f64], p: &[f64]) -> f64 {
    y.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len().max(1) as f64
}

/// Fit on `input/train_data`, score on `input/val_data`, write the model and
/// validation artifacts under `out`. Ridge picks the grid penalty with the
/// lowest validation MSE, which on a fixed validation set is the one with the
/// highest validation R²; ties keep the smaller penalty.
pub fn baseline_train(
    kind: BaselineKind,
    input: &Path,
    out: &Path,
    params: &TrainParams,
) -> Result<ScoreSet, BaselineError> {
    let train = read_partition(&input.join("train_data"))?;
    let val = read_partition(&input.join("val_data"))?;
    if train.feature_names != val.feature_names {
        return Err(ContractError::ContractViolation("train and val feature columns differ".into()).into());
    }
    if train.n_rows() == 0 {
        return Err(ContractError::ContractViolation("train partition is empty".into()).into());
    }
    let stats: StandardizationStats = read_json(&input.join("train_data").join(STATS_FILE))?;
    let p = train.n_cols();

    let mut model = ModelFile {
        kind,
        feature_names: train.feature_names.clone(),
        stats,
        ridge: None,
        knn: None,
        lambda_search: vec![],
    };
    match kind {
        BaselineKind::Ridge => {
            let grid: Vec<f64> = params.lambda.map(|l| vec![l]).unwrap_or_else(|| LAMBDA_GRID.to_vec());
            let mut best: Option<(f64, RidgeModel)> = None;
            for lambda in grid {
                let m = RidgeModel::fit(&train.x, p, &train.y, lambda)?;
                let e = mse(&val.y, &m.predict(&val.x, val.n_rows()));
                model.lambda_search.push((lambda, e));
                if best.as_ref().is_none_or(|(b, _)| e < *b) {
                    best = Some((e, m));
                }
            }
            model.ridge = best.map(|(_, m)| m);
        }
        BaselineKind::Knn => model.knn = Some(KnnModel::fit(&train.x, p, &train.y, params.k)?),
    }

    let model_dir = out.join(MODEL_DIR);
    fs::create_dir_all(&model_dir).map_err(ContractError::io(&model_dir))?;
    write_json(&model_dir.join(MODEL_FILE), &model)?;
    let recs = records(&val, &model.predict(&val));
    write_predictions(out.join(VAL_PREDICTIONS), &recs)?;
    let scores = compute_scores(&recs);
    write_scores(out.join(VAL_SCORES), &scores)?;
    Ok(scores)
}

/// Predict `test_dir` with the model in `model_dir`, writing the test
/// artifacts under `out`.
pub fn baseline_infer(model_dir: &Path, test_dir: &Path, out: &Path) -> Result<ScoreSet, BaselineError> {
    let violation = |m: String| BaselineError::Contract(ContractError::ContractViolation(m));
    let mpath = model_dir.join(MODEL_FILE);
    if !mpath.is_file() {
        return Err(violation(format!("model directory {} has no {MODEL_FILE}", model_dir.display())));
    }
    let model: ModelFile = read_json(&mpath)?;
    let weights_ok = match (&model.ridge, &model.knn) {
        (Some(r), _) => r.weights.len() == model.feature_names.len(),
        (None, Some(k)) => k.n_features == model.feature_names.len(),
        (None, None) => false,
    };
    if !weights_ok {
        return Err(violation(format!("{} is incomplete", mpath.display())));
    }
    if !test_dir.join(super::PARTITION_FILE).is_file() {
        return Err(violation(format!("test data directory {} is empty", test_dir.display())));
    }
    let test = read_partition(test_dir)?;
    if test.feature_names != model.feature_names {
        return Err(violation("test feature columns differ from the model's".into()));
    }
    fs::create_dir_all(out).map_err(ContractError::io(out))?;
    let recs = records(&test, &model.predict(&test));
    write_predictions(out.join(TEST_PREDICTIONS), &recs)?;
    let scores = compute_scores(&recs);
    write_scores(out.join(TEST_SCORES), &scores)?;
    Ok(scores)
}

/// Parameter schema of a baseline stage.
pub fn stage_schema(kind: BaselineKind, stage: StageKind) -> Schema {
    let mut s = Schema::standard(stage);
    if stage == StageKind::Train {
        match kind {
            BaselineKind::Ridge => s.push(ParamSpec::new(
                "lambda",
                ParamKind::Float,
                Tier::Model,
                "fixed ridge penalty; searched on validation when unset",
            )),
            BaselineKind::Knn => s.push(
                ParamSpec::new("k", ParamKind::Int, Tier::Model, "number of neighbours").default_value("5"),
            ),
        }
    }
    s
}

fn train_params(p: &ParamSet) -> Result<TrainParams, BaselineError> {
    let mut t = TrainParams {
        lambda: p.opt_float("lambda")?,
        ..Default::default()
    };
    if p.raw("k").is_some() {
        let k = p.int("k")?;
        if k < 1 {
            return Err(BaselineError::InvalidParam(format!("k must be at least 1, got {k}")));
        }
        t.k = k as usize;
    }
    Ok(t)
}

/// Command-line entry for a baseline stage. `args` are the stage flags.
pub fn run_stage(model: &str, stage: StageKind, args: &[String]) -> Result<(), BaselineError> {
    let kind = BaselineKind::from_model_name(model)?;
    let schema = stage_schema(kind, stage);
    let cli = schema.parse_cli(args)?;
    let config = match cli.iter().rev().find(|(k, _)| k == "config") {
        Some((_, path)) => Some(ConfigFile::load(Path::new(path))?),
        None => None,
    };
    let p = resolve_params(&schema, config.as_ref(), &cli)?;
    let out = p.path("output_dir")?;
    match stage {
        StageKind::Preprocess => {
            let index = BenchmarkIndex::load(p.path("benchmark_root")?)?;
            let split = p.int("split_index")?;
            let split = usize::try_from(split)
                .map_err(|_| BaselineError::InvalidParam(format!("split_index must be non-negative, got {split}")))?;
            let selection = FeatureSelection {
                cell: p.list("cell_features"),
                drug: p.list("drug_features"),
            };
            baseline_preprocess(
                &index,
                p.str("source_dataset")?,
                p.str("target_dataset")?,
                split,
                &p.path("split_dir")?,
                &selection,
                &out,
            )?;
        }
        StageKind::Train => {
            baseline_train(kind, &p.path("input_dir")?, &out, &train_params(&p)?)?;
        }
        StageKind::Infer => {
            baseline_infer(&p.path("model_dir")?, &p.path("test_data_dir")?, &out)?;
        }
    }
    Ok(())
}
