//! Black-box tests of the `kmsv` binary: exit codes, file outputs, and the
//! shipped dataset fixture.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn kmsv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kmsv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn fixture_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/school_shaped.csv")
        .canonicalize()
        .expect("fixture exists")
}

const TOY_CSV: &str = "task_id,y,f1,f2,f3\n\
    a,1.0,0.1,0.2,0.3\n\
    a,2.0,0.9,0.1,0.4\n\
    a,1.5,0.3,0.8,0.2\n\
    a,2.5,0.7,0.6,0.1\n\
    b,0.5,0.2,0.3,0.9\n\
    b,1.5,0.8,0.2,0.7\n\
    b,0.8,0.1,0.9,0.2\n\
    b,1.9,0.6,0.4,0.5\n";

#[test]
fn ridge_smoke_run_on_toy_csv() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("toy.csv"), TOY_CSV);
    let config = format!(
        r#"
seed = 1

[dataset]
kind = "csv"
path = "{}"

[split]
train_fraction = 0.5

[[methods]]
name = "ridge"
lambda = 0.5
"#,
        dir.path().join("toy.csv").display()
    );
    write(&dir.path().join("cfg.toml"), &config);
    let cfg = dir.path().join("cfg.toml");
    let out = dir.path().join("out");

    let fit = kmsv(&["fit", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(fit.status.success(), "{}", String::from_utf8_lossy(&fit.stderr));
    let eval = kmsv(&["eval", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));

    let summary =
        std::fs::read_to_string(out.join("rate0p5/ridge/rep0/summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next().unwrap(), "nmse_mean,nmse_pooled,ew,runtime,config_hash");
    // no ground truth for CSV data: the ew column is empty, not an error
    let data: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(data[2].is_empty(), "ew should be empty, got {:?}", data[2]);
    assert_eq!(data[4].len(), 16, "config hash present");
}

#[test]
fn full_rank_synth_request_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"
[dataset]
kind = "synthetic"
tasks = 10
features = 20
rank = 10

[[methods]]
name = "ridge"
"#;
    write(&dir.path().join("cfg.toml"), config);
    let out = kmsv(&[
        "synth",
        "--config",
        dir.path().join("cfg.toml").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_config_exits_2() {
    let out = kmsv(&["fit"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_csv_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    write(
        &dir.path().join("bad.csv"),
        "task_id,y,f1,f2\na,1.0,0.2,0.3\na,oops,0.4,0.5\n",
    );
    let config = format!(
        r#"
[dataset]
kind = "csv"
path = "{}"

[[methods]]
name = "ridge"
"#,
        dir.path().join("bad.csv").display()
    );
    write(&dir.path().join("cfg.toml"), &config);
    let out = kmsv(&[
        "fit",
        "--config",
        dir.path().join("cfg.toml").to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let message = String::from_utf8_lossy(&out.stderr);
    assert!(message.contains("line 3"), "error names the row: {message}");
}

#[test]
fn synth_is_reproducible_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"
seed = 5

[dataset]
kind = "synthetic"
tasks = 4
features = 6
samples_per_task = 8
rank = 2
noise_std = 1.0

[[methods]]
name = "ridge"
"#;
    write(&dir.path().join("cfg.toml"), config);
    let cfg = dir.path().join("cfg.toml");
    for out in ["x", "y"] {
        let result = kmsv(&[
            "synth",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().join(out).to_str().unwrap(),
        ]);
        assert!(result.status.success());
        let stdout = String::from_utf8_lossy(&result.stdout);
        assert!(stdout.contains("T=4 d=6 n=8 seed=5"), "prints shapes and seed: {stdout}");
    }
    let a = std::fs::read(dir.path().join("x/tasks.csv")).unwrap();
    let b = std::fs::read(dir.path().join("y/tasks.csv")).unwrap();
    assert_eq!(a, b);
    let a = std::fs::read(dir.path().join("x/wstar.csv")).unwrap();
    let b = std::fs::read(dir.path().join("y/wstar.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"
seed = 5

[dataset]
kind = "synthetic"
tasks = 4
features = 6
samples_per_task = 8
rank = 2
noise_std = 1.0

[[methods]]
name = "ridge"
"#;
    write(&dir.path().join("cfg.toml"), config);
    let cfg = dir.path().join("cfg.toml");
    let base = kmsv(&[
        "synth",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("base").to_str().unwrap(),
    ]);
    assert!(base.status.success());
    let reseeded = kmsv(&[
        "synth",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "6",
        "--out",
        dir.path().join("reseeded").to_str().unwrap(),
    ]);
    assert!(reseeded.status.success());
    let a = std::fs::read(dir.path().join("base/tasks.csv")).unwrap();
    let b = std::fs::read(dir.path().join("reseeded/tasks.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn school_shaped_fixture_loads_with_expected_shape() {
    let dataset = kmsv::data::load_csv_tasks(fixture_path()).unwrap();
    assert_eq!(dataset.task_count(), 139);
    assert_eq!(dataset.feature_dim(), 28);
    assert!(dataset.tasks().iter().all(|t| t.sample_count() == 6));
}

#[test]
fn fixture_runs_through_the_full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!(
        r#"
seed = 3

[dataset]
kind = "csv"
path = "{}"

[split]
train_fraction = 0.3

[noise]
task_fraction = 0.3
mean = 1.0
variance = 2.0

[[methods]]
name = "kmsv-new"
k = 10
max_iter = 25
"#,
        fixture_path().display()
    );
    write(&dir.path().join("cfg.toml"), &config);
    let cfg = dir.path().join("cfg.toml");
    let out = dir.path().join("out");
    for sub in ["fit", "eval", "report"] {
        let result = kmsv(&[
            sub,
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(
            result.status.success(),
            "{sub}: {}",
            String::from_utf8_lossy(&result.stderr)
        );
    }
    let report = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(report.lines().count() >= 2);
    assert!(report.starts_with(
        "method,train_fraction,repetitions,nmse_mean_avg,nmse_mean_std,"
    ));
}
