//! End-to-end runs of the command-line binary on small scenes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;
use tomoboost::features::read_feature_grid;
use tomoboost::gbdt::GbdtModel;
use tomoboost::sardata::{read_raster, read_stack};

fn tomoboost(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tomoboost"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = tomoboost(out, args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SCENE: &[&str] = &["simulate", "--rows", "72", "--cols", "72"];
const TRAIN: &[&str] = &["train", "--trees", "15", "--depth", "4", "--patch-size", "24", "--early-stopping", "0"];

/// simulate, features, train and predict with small settings.
fn pipeline(out: &Path, threads: &str) {
    ok(out, &[SCENE, &["--threads", threads]].concat());
    ok(out, &["features", "--window", "9", "--threads", threads]);
    ok(out, &[TRAIN, &["--threads", threads]].concat());
    ok(out, &["predict", "--model", out.join("model_chm_regression_nc.json").to_str().unwrap()]);
}

#[test]
fn full_pipeline_writes_every_artifact() {
    let dir = TempDir::new().unwrap();
    let out = dir.path();
    let printed = ok(out, SCENE);
    assert!(printed.contains("rows 72"), "{printed}");
    for stack in ["stack_nc", "stack_c"] {
        let s = read_stack(&out.join(stack)).unwrap();
        assert_eq!((s.rows(), s.cols(), s.num_channels()), (72, 72, 18));
    }
    ok(out, &["features", "--window", "9"]);
    let grid = read_feature_grid(&out.join("features_nc")).unwrap();
    assert_eq!((grid.rows(), grid.cols(), grid.dim(), grid.window()), (64, 64, 52, 9));
    assert_eq!(read_raster(&out.join("chm_avg")).unwrap().rows(), 64);

    ok(out, TRAIN);
    let model = GbdtModel::load(&out.join("model_chm_regression_nc.json")).unwrap();
    assert_eq!(model.num_features(), 52);
    assert!(out.join("train_chm_regression_nc.json").exists());

    ok(out, &["predict", "--model", out.join("model_chm_regression_nc.json").to_str().unwrap()]);
    let pred = read_raster(&out.join("pred_chm_regression_nc")).unwrap();
    assert_eq!((pred.rows(), pred.cols()), (64, 64));
    assert!(pred.values().iter().all(|v| *v >= 0.0));

    ok(
        out,
        &[
            "evaluate",
            "--prediction",
            out.join("pred_chm_regression_nc").to_str().unwrap(),
            "--patch-size",
            "24",
        ],
    );
    let eval = out.join("eval_chm_regression_nc");
    for file in ["metrics.json", "joint_histogram.csv", "joint_histogram.svg", "tracelines.csv", "timing.json"] {
        assert!(eval.join(file).exists(), "missing {file}");
    }
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(eval.join("metrics.json")).unwrap()).unwrap();
    assert!(metrics["rmse"].as_f64().unwrap() > 0.0);
    let svg = fs::read_to_string(eval.join("joint_histogram.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("stroke-dasharray"));
}

#[test]
fn classification_paradigm_runs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path();
    ok(out, SCENE);
    ok(out, &["features", "--window", "9", "--input", "c"]);
    ok(out, &[TRAIN, &["--paradigm", "classification", "--input", "c", "--target", "dtm"]].concat());
    let model = GbdtModel::load(&out.join("model_dtm_classification_c.json")).unwrap();
    assert!(model.quantization().is_some());
}

#[test]
fn outputs_do_not_depend_on_thread_count_or_repetition() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    pipeline(a.path(), "1");
    pipeline(b.path(), "3");
    for file in [
        "stack_nc/meta.json",
        "chm.f32",
        "features_nc.f32",
        "model_chm_regression_nc.json",
        "pred_chm_regression_nc.f32",
    ] {
        let x = fs::read(a.path().join(file)).unwrap();
        let y = fs::read(b.path().join(file)).unwrap();
        assert!(x == y, "{file} differs");
    }
    // rerunning in place rewrites the same model
    let before = fs::read(a.path().join("model_chm_regression_nc.json")).unwrap();
    ok(a.path(), TRAIN);
    assert_eq!(before, fs::read(a.path().join("model_chm_regression_nc.json")).unwrap());
}

#[test]
fn config_file_overrides_flags() {
    let dir = TempDir::new().unwrap();
    let out = dir.path();
    ok(out, SCENE);
    let config = out.join("run.conf");
    fs::write(&config, "# smaller window\nwindow = 7\n").unwrap();
    ok(out, &["features", "--window", "9", "--config", config.to_str().unwrap()]);
    assert_eq!(read_feature_grid(&out.join("features_nc")).unwrap().window(), 7);
}

#[test]
fn scene_config_sets_simulator_fields() {
    let dir = TempDir::new().unwrap();
    let out = dir.path();
    let config = out.join("scene.conf");
    fs::write(&config, "rows = 20\ncols = 30\nphase_screen_sigma = 0\n").unwrap();
    ok(out, &["simulate", "--rows", "64", "--config", config.to_str().unwrap()]);
    let s = read_stack(&out.join("stack_c")).unwrap();
    assert_eq!((s.rows(), s.cols()), (20, 30));
    // calibrated scenes have no separate non-calibrated stack
    assert!(!out.join("stack_nc").exists());
}

#[test]
fn even_window_is_rejected() {
    let dir = TempDir::new().unwrap();
    let out = dir.path();
    ok(out, SCENE);
    let o = tomoboost(out, &["features", "--window", "8"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("window"));
    assert!(!out.join("features_nc.f32").exists());
}

#[test]
fn errors_exit_nonzero() {
    let dir = TempDir::new().unwrap();
    let out = dir.path();
    // nothing simulated yet
    let missing = tomoboost(out, &["features"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));
    let usage = tomoboost(out, &["train", "--no-such-flag"]);
    assert_eq!(usage.status.code(), Some(2));
    let bad_config = out.join("bad.conf");
    fs::write(&bad_config, "this line has no equals sign\n").unwrap();
    let o = tomoboost(out, &["simulate", "--config", bad_config.to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn report_writes_sweep_tables() {
    let dir = TempDir::new().unwrap();
    let out = dir.path();
    ok(out, SCENE);
    ok(
        out,
        &[
            "report",
            "--windows",
            "7,9",
            "--paradigms",
            "regression",
            "--trees",
            "5",
            "--depth",
            "3",
            "--patch-size",
            "24",
        ],
    );
    let table = fs::read_to_string(out.join("report/rmse_chm.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("method,7x7,9x9"));
    let rows: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(rows, ["Regression-NC", "Regression-C"]);
    assert!(out.join("report/rmse_dtm.svg").exists());
}
