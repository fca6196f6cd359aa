use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fcnn_core::config::RunConfig;
use fcnn_core::datasets::{save_csv, DatasetKind};
use fcnn_core::eval::benchmark::{model_seed, prepare_dataset};
use fcnn_core::eval::{run_benchmark, BenchmarkOptions};
use fcnn_core::pipeline::ModelKind;

fn fcnn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcnn"))
        .args(args)
        .current_dir(dir)
        .env_remove("FCNN_OUT_DIR")
        .output()
        .expect("failed to launch fcnn")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SMALL_CONFIG: &str = "\
[data]
n_per_class = 25

[models.fcnn.train]
epochs = 2
";

#[test]
fn generate_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    ok(&fcnn(
        dir.path(),
        &["generate", "--kind", "two-spirals", "--out", "a.csv"],
    ));
    ok(&fcnn(
        dir.path(),
        &["generate", "--kind", "two-spirals", "--out", "b.csv"],
    ));
    let a = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(a.lines().count(), 400);
    assert_eq!(a, fs::read_to_string(dir.path().join("b.csv")).unwrap());

    ok(&fcnn(
        dir.path(),
        &[
            "generate", "--kind", "corners", "--n", "7", "--seed", "3", "--out", "c.csv",
        ],
    ));
    assert_eq!(
        fs::read_to_string(dir.path().join("c.csv")).unwrap().lines().count(),
        14
    );
}

#[test]
fn unknown_kind_is_a_usage_error_listing_choices() {
    let dir = tempfile::tempdir().unwrap();
    let out = fcnn(dir.path(), &["generate", "--kind", "swiss-roll"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    for kind in [
        "half-kernel",
        "two-spirals",
        "cluster-in-cluster",
        "crescent-moon",
        "corners",
        "outliers",
    ] {
        assert!(msg.contains(kind), "{msg}");
    }
}

#[test]
fn render_exports_one_folder_per_class() {
    let dir = tempfile::tempdir().unwrap();
    ok(&fcnn(
        dir.path(),
        &["generate", "--kind", "crescent-moon", "--out", "moon.csv"],
    ));
    let stdout = ok(&fcnn(dir.path(), &["render", "--data", "moon.csv", "--out", "dm"]));
    assert!(stdout.contains("class_0/") && stdout.contains("class_1/"), "{stdout}");
    let root = dir.path().join("dm");
    let mut total = 0;
    for class in ["class_0", "class_1"] {
        let pngs = fs::read_dir(root.join(class)).unwrap().count();
        assert_eq!(pngs, 200, "{class}");
        total += pngs;
    }
    assert_eq!(total, 400);
    assert!(root.join("pipeline.json").is_file());

    ok(&fcnn(dir.path(), &["render", "--data", "moon.csv", "--out", "dm2"]));
    let other = dir.path().join("dm2");
    for entry in ["class_0", "class_1", "pipeline.json"] {
        let path = root.join(entry);
        let files: Vec<_> = if path.is_dir() {
            fs::read_dir(&path).unwrap().map(|e| e.unwrap().path()).collect()
        } else {
            vec![path]
        };
        for file in files {
            let rel = file.strip_prefix(&root).unwrap();
            assert_eq!(
                fs::read(&file).unwrap(),
                fs::read(other.join(rel)).unwrap(),
                "{}",
                rel.display()
            );
        }
    }
}

#[test]
fn tree_train_then_predict_reproduces_labels() {
    let dir = tempfile::tempdir().unwrap();
    ok(&fcnn(
        dir.path(),
        &["generate", "--kind", "corners", "--out", "corners.csv"],
    ));
    ok(&fcnn(
        dir.path(),
        &[
            "train",
            "--data",
            "corners.csv",
            "--model",
            "tree",
            "--out",
            "tree.json",
        ],
    ));
    let stdout = ok(&fcnn(
        dir.path(),
        &["predict", "--model", "tree.json", "--input", "corners.csv"],
    ));
    let csv = fs::read_to_string(dir.path().join("corners.csv")).unwrap();
    let labels: Vec<&str> = csv.lines().map(|l| l.rsplit(',').next().unwrap()).collect();
    let preds: Vec<&str> = stdout.lines().collect();
    // an unlimited tree memorizes its training set
    assert_eq!(preds, labels);

    // feature-only rows are accepted too
    let rows: String = csv
        .lines()
        .take(5)
        .map(|l| format!("{}\n", l.rsplit_once(',').unwrap().0))
        .collect();
    fs::write(dir.path().join("five.csv"), rows).unwrap();
    let stdout = ok(&fcnn(
        dir.path(),
        &["predict", "--model", "tree.json", "--input", "five.csv"],
    ));
    assert_eq!(stdout.lines().count(), 5);
}

#[test]
fn predict_rejects_mismatched_input_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    ok(&fcnn(
        dir.path(),
        &["generate", "--kind", "outliers", "--n", "10", "--out", "o.csv"],
    ));
    ok(&fcnn(
        dir.path(),
        &["train", "--data", "o.csv", "--model", "bayes", "--out", "b.json"],
    ));
    fs::write(dir.path().join("wide.csv"), "0.1,0.2,0.3,0.4\n").unwrap();
    let out = fcnn(dir.path(), &["predict", "--model", "b.json", "--input", "wide.csv"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));

    let out = fcnn(dir.path(), &["predict", "--model", "b.json", "--input", "nope.csv"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("nope.csv"));
    let out = fcnn(dir.path(), &["train", "--data", "absent.csv", "--model", "tree"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn datamart_training_is_fcnn_only() {
    let dir = tempfile::tempdir().unwrap();
    ok(&fcnn(
        dir.path(),
        &["generate", "--kind", "corners", "--n", "10", "--out", "c.csv"],
    ));
    ok(&fcnn(dir.path(), &["render", "--data", "c.csv", "--out", "dm"]));
    let out = fcnn(dir.path(), &["train", "--datamart", "dm", "--model", "svm"]);
    assert_eq!(out.status.code(), Some(2));
    ok(&fcnn(
        dir.path(),
        &["train", "--datamart", "dm", "--epochs", "1", "--out", "f.json"],
    ));
    let stdout = ok(&fcnn(dir.path(), &["predict", "--model", "f.json", "--input", "c.csv"]));
    assert_eq!(stdout.lines().count(), 20);
}

#[test]
fn benchmark_honors_filters_and_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL_CONFIG).unwrap();
    ok(&fcnn(dir.path(), &["config", "validate", "small.toml"]));
    let stdout = ok(&fcnn(
        dir.path(),
        &[
            "--config",
            "small.toml",
            "benchmark",
            "--only",
            "two-spirals",
            "--models",
            "fcnn,svm",
            "--out",
            "rep",
        ],
    ));
    assert!(stdout.contains("Two Spirals"), "{stdout}");
    let table = fs::read_to_string(dir.path().join("rep/table.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    let report: String = fs::read_to_string(dir.path().join("rep/report.json")).unwrap();
    assert_eq!(report.matches("\"accuracy\"").count(), 2);
}

#[test]
fn config_errors_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("typo.toml"), "[data]\nn_per_klass = 3\n").unwrap();
    let out = fcnn(dir.path(), &["config", "validate", "typo.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("n_per_klass"), "{}", stderr(&out));
    fs::write(dir.path().join("future.toml"), "schema_version = 7\n").unwrap();
    assert_eq!(
        fcnn(dir.path(), &["config", "validate", "future.toml"]).status.code(),
        Some(2)
    );

    let default = ok(&fcnn(dir.path(), &["config", "default"]));
    fs::write(dir.path().join("default.toml"), default).unwrap();
    ok(&fcnn(dir.path(), &["config", "validate", "default.toml"]));
}

#[test]
fn output_dir_comes_from_config_then_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_fcnn"));
        cmd.args(args).current_dir(dir.path()).env_remove("FCNN_OUT_DIR");
        if let Some(v) = env {
            cmd.env("FCNN_OUT_DIR", v);
        }
        ok(&cmd.output().unwrap());
    };
    run(&["generate", "--kind", "corners", "--n", "3"], Some("from-env"));
    assert!(dir.path().join("from-env/corners.csv").is_file());

    fs::write(dir.path().join("out.toml"), "output_dir = \"from-config\"\n").unwrap();
    run(
        &["--config", "out.toml", "generate", "--kind", "corners", "--n", "3"],
        Some("from-env"),
    );
    assert!(dir.path().join("from-config/corners.csv").is_file());

    run(&["generate", "--kind", "outliers", "--n", "3"], None);
    assert!(dir.path().join("outliers.csv").is_file());
}

#[test]
fn every_subcommand_has_help() {
    let dir = tempfile::tempdir().unwrap();
    ok(&fcnn(dir.path(), &["--help"]));
    for sub in [
        "generate",
        "fuzzify",
        "render",
        "train",
        "predict",
        "benchmark",
        "config",
    ] {
        let stdout = ok(&fcnn(dir.path(), &[sub, "--help"]));
        assert!(stdout.contains("Usage:"), "{sub}: {stdout}");
    }
}

#[test]
fn fuzzify_preview_prints_partitioned_memberships() {
    let dir = tempfile::tempdir().unwrap();
    ok(&fcnn(
        dir.path(),
        &["generate", "--kind", "half-kernel", "--n", "4", "--out", "h.csv"],
    ));
    let stdout = ok(&fcnn(dir.path(), &["fuzzify", "--data", "h.csv", "--rows", "3"]));
    let rows: Vec<&str> = stdout.lines().skip_while(|l| !l.starts_with("row,")).skip(1).collect();
    assert_eq!(rows.len(), 3 * 2);
    for line in rows {
        let sum: f64 = line.split(',').skip(2).map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-3, "{line}");
    }
}

#[test]
fn fcnn_predict_matches_benchmark_predictions() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL_CONFIG).unwrap();
    let cfg = RunConfig::load(&dir.path().join("small.toml")).unwrap();
    let kind = DatasetKind::Corners;
    let (train, test, _) = prepare_dataset(&cfg, kind).unwrap();
    save_csv(&train, &dir.path().join("train.csv")).unwrap();
    save_csv(&test, &dir.path().join("test.csv")).unwrap();

    let seed = model_seed(cfg.master_seed, kind, ModelKind::Fcnn).to_string();
    ok(&fcnn(
        dir.path(),
        &[
            "--config",
            "small.toml",
            "train",
            "--data",
            "train.csv",
            "--seed",
            &seed,
            "--out",
            "f.json",
        ],
    ));
    let stdout = ok(&fcnn(
        dir.path(),
        &["predict", "--model", "f.json", "--input", "test.csv"],
    ));
    let cli: Vec<usize> = stdout.lines().map(|l| l.parse().unwrap()).collect();

    let mut bench_cfg = cfg.clone();
    bench_cfg.benchmark.datasets = vec![kind];
    bench_cfg.benchmark.models = vec![ModelKind::Fcnn];
    let out = run_benchmark(&BenchmarkOptions {
        config: bench_cfg,
        work_dir: dir.path().join("bench"),
    })
    .unwrap();
    assert_eq!(&cli, &out.predictions[0].2);
}
