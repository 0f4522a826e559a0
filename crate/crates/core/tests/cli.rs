//! The command line against synthetic benchmarks and script models.

mod common;

use std::fs;

use common::{csabench, ok, p, script, synth_benchmark};
use csabench::scheduler::{Manifest, TaskStatus, MANIFEST_FILE};

#[test]
fn run_metrics_report() {
    let dir = tempfile::tempdir().unwrap();
    let bench = synth_benchmark(dir.path(), &[120, 150], &[0.0, 0.1], 3);
    let run = dir.path().join("run");
    ok(&csabench(&["run", "--benchmark", p(&bench), "--models", "baseline-ridge", "baseline-knn", "--n-splits", "3", "--slots", "2", "--out", p(&run)]));

    let m = dir.path().join("metrics");
    ok(&csabench(&["metrics", "--rundir", p(&run), "--metric", "r2", "--out", p(&m)]));
    for model in ["baseline-ridge", "baseline-knn"] {
        for f in ["G_mean.csv", "G_std.csv", "Ga.csv", "Gn.csv", "Gna.csv", "tensor.json"] {
            assert!(m.join(model).join(f).is_file(), "{model}/{f}");
        }
    }
    let g = fs::read_to_string(m.join("baseline-ridge/G_mean.csv")).unwrap();
    assert_eq!(g.lines().next(), Some("source,synth0,synth1"));

    let r = dir.path().join("report");
    ok(&csabench(&["report", "--rundir", p(&run), "--out", p(&r)]));
    for f in [
        "heatmap_G_baseline-ridge.svg",
        "heatmap_Gn_baseline-knn.svg",
        "within_dataset_mean.csv",
        "within_dataset_mean.md",
        "within_dataset_std.csv",
        "within_dataset_std.md",
        "distributions.csv",
    ] {
        assert!(r.join(f).is_file(), "{f}");
    }
    // Two models, two sources, two targets, three splits.
    let dist = fs::read_to_string(r.join("distributions.csv")).unwrap();
    assert_eq!(dist.lines().count(), 1 + 2 * 2 * 2 * 3);
    // Smaller dataset first.
    let mean = fs::read_to_string(r.join("within_dataset_mean.csv")).unwrap();
    assert!(mean.starts_with("Model,synth0,synth1,Mean across datasets\n"));

    let again = dir.path().join("report2");
    ok(&csabench(&["report", "--rundir", p(&run), "--out", p(&again)]));
    for f in ["heatmap_G_baseline-ridge.svg", "within_dataset_std.md", "distributions.csv"] {
        assert_eq!(fs::read(r.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn external_script_model() {
    let dir = tempfile::tempdir().unwrap();
    let bench = synth_benchmark(dir.path(), &[100, 100], &[0.0, 0.0], 3);
    let mdir = dir.path().join("ext");
    fs::create_dir_all(&mdir).unwrap();
    // Delegates to the harness's ridge under a different model name.
    script(&mdir.join("stage.sh"), r#"exec "$CSABENCH_HARNESS" stage baseline-ridge "$@""#);
    fs::write(
        mdir.join("model.json"),
        r#"{"name": "ext-ridge", "stages": {
            "preprocess": {"program": "./stage.sh", "args": ["preprocess"]},
            "train": {"program": "./stage.sh", "args": ["train"]},
            "infer": {"program": "./stage.sh", "args": ["infer"]}}}"#,
    )
    .unwrap();
    let run = dir.path().join("run");
    let out = std::process::Command::new(common::bin())
        .env("CSABENCH_HARNESS", common::bin())
        .args(["run", "--benchmark", p(&bench), "--models", "baseline-ridge", p(&mdir.join("model.json")), "--n-splits", "3", "--out", p(&run)])
        .output()
        .unwrap();
    ok(&out);
    let ridge = common::score_files(&run.join("baseline-ridge"));
    let ext = common::score_files(&run.join("ext-ridge"));
    assert_eq!(ridge.len(), 3 * 4 + 2 * 3);
    assert_eq!(ridge, ext);
}

#[test]
fn misnamed_predictions_is_a_contract_violation() {
    let dir = tempfile::tempdir().unwrap();
    let bench = synth_benchmark(dir.path(), &[60], &[0.0], 3);
    let mdir = dir.path().join("bad");
    fs::create_dir_all(&mdir).unwrap();
    script(
        &mdir.join("stage.sh"),
        r#"stage=$1; shift
out=""
while [ $# -gt 0 ]; do
  if [ "$1" = "--output_dir" ]; then out=$2; fi
  shift
done
cd "$out"
case "$stage" in
  preprocess) mkdir -p train_data val_data test_data ;;
  train) mkdir -p model
         printf 'sample_id,cell_id,drug_id,auc_true,auc_pred\n0,c,d,0.5,0.5\n' > val_predictions.csv
         printf '{"r2": null, "mse": 0, "rmse": 0, "pearson_r": null, "spearman_rho": null}\n' > val_scores.json ;;
  infer) exit 0 ;;
esac"#,
    );
    fs::write(
        mdir.join("model.json"),
        r#"{"name": "bad", "stages": {
            "preprocess": {"program": "./stage.sh", "args": ["preprocess"]},
            "train": {"program": "./stage.sh", "args": ["train"]},
            "infer": {"program": "./stage.sh", "args": ["infer"]}}}"#,
    )
    .unwrap();
    let run = dir.path().join("run");
    let out = csabench(&["run", "--benchmark", p(&bench), "--models", p(&mdir.join("model.json")), "--n-splits", "3", "--out", p(&run)]);
    assert_eq!(out.status.code(), Some(1));
    let records = Manifest::read(&run.join(MANIFEST_FILE)).unwrap();
    let latest = |id: &str| records.iter().rev().find(|r| r.task_id == id).unwrap().clone();
    let train = latest("bad/synth0-synth0/split_0/train");
    assert_eq!(train.status, TaskStatus::Failed);
    assert_eq!(train.error_class.as_deref(), Some("contract-violation"));
    assert!(train.message.as_deref().unwrap_or("").contains("val_y_data_predicted.csv"));
    let infer = latest("bad/synth0-synth0/split_0/infer");
    assert_eq!(infer.error_class.as_deref(), Some("failed-upstream"));
}

#[test]
fn exit_codes() {
    assert_eq!(csabench(&["stage", "baseline-ridge", "train", "--bogus", "1"]).status.code(), Some(2));
    assert_eq!(csabench(&["stage", "baseline-ridge", "train"]).status.code(), Some(2));
    assert_eq!(csabench(&["run", "--models", "baseline-ridge"]).status.code(), Some(2));
    assert_eq!(csabench(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nothing");
    let out = csabench(&["stage", "baseline-ridge", "infer", "--input_dir", p(&missing), "--output_dir", p(&missing), "--model_dir", p(&missing), "--test_data_dir", p(&missing)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(csabench(&["--help"]).status.code(), Some(0));
}

#[test]
fn splitgen_and_curvefit() {
    let dir = tempfile::tempdir().unwrap();
    let bench = synth_benchmark(dir.path(), &[50], &[0.0], 3);
    ok(&csabench(&["splitgen", "--benchmark", p(&bench), "--dataset", "synth0", "--n-splits", "5", "--seed", "3"]));
    assert!(bench.join("synth0/splits/synth0_split_4_test.txt").is_file());

    let input = dir.path().join("raw.csv");
    let mut text = String::from("cell_id,drug_id,dose_M,viability\n");
    for i in 0..8 {
        let dose = 10f64.powf(-10.0 + 6.0 * i as f64 / 7.0);
        let v = 0.2 + 0.8 / (1.0 + (dose / 1e-7).powf(1.5));
        text.push_str(&format!("c1,d1,{dose:e},{v}\nc2,d1,{dose:e},0.5\n"));
    }
    text.push_str("c3,d1,oops,0.5\n");
    fs::write(&input, text).unwrap();
    let output = dir.path().join("response.csv");
    ok(&csabench(&["curvefit", "--input", p(&input), "--output", p(&output)]));
    let table = fs::read_to_string(&output).unwrap();
    assert_eq!(table.lines().count(), 2);
    assert!(table.starts_with("cell_id,drug_id,auc,r2_fit\nc1,d1,"));
    let log: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("response.csv.fitlog.json")).unwrap()).unwrap();
    assert_eq!(log["fitted"], 1);
    assert_eq!(log["errored"], 1);
}
