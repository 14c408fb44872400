//! Command implementations: dataset synthesis, fitting, evaluation, and
//! cross-run aggregation.
//!
//! Every artifact lands under the config's output directory:
//!
//! ```text
//! out/
//!   config_resolved.toml                # echo; re-running it reproduces all bytes
//!   tasks.csv, wstar.csv                # synth exports
//!   <rate>/<method>/rep<i>/model.csv    # fitted weights and biases
//!                          fit_meta.csv # iterations, converged, wall_time, ...
//!                          convergence.csv, spectrum.csv
//!                          metrics.csv, summary.csv
//!   nmse_vs_ratio.csv                   # one row per (method, training rate)
//!   report.csv                          # mean/std aggregates across repetitions
//!   *.svg                               # optional plots (no timestamps)
//! ```
//!
//! All randomness is derived from the config seed and the (rate, repetition)
//! coordinates, so `fit` and `eval` independently reconstruct identical
//! splits and two runs of the same resolved config produce byte-identical
//! CSV files (wall-clock fields aside).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use kmsv::data::{
    generate_synthetic, inject_label_noise, load_csv_tasks, split_train_test,
    standardize_features, write_csv_tasks, write_matrix_csv, NoiseSpec, SplitSpec,
};
use kmsv::eval::{
    evaluate, write_convergence_csv, write_metrics_csv, write_spectrum_csv, write_summary_csv,
    MetricReport, SummaryRow,
};
use kmsv::rng::derive_seed;
use kmsv::solvers::{
    solve_kmsv, solve_kmsv_new, solve_ridge, FitReport, ModelParams, MultiTaskDataset,
};
use kmsv::{Error, Result};

use crate::config::{DatasetConfig, ExperimentConfig, MethodConfig, MethodName};
use crate::plot::{render_line_chart, Series};

/// Source data plus the synthetic ground truth when one exists.
pub struct ResolvedDataset {
    pub full: MultiTaskDataset,
    pub w_star: Option<DMatrix<f64>>,
}

pub fn resolve_dataset(cfg: &ExperimentConfig) -> Result<ResolvedDataset> {
    match &cfg.dataset {
        DatasetConfig::Synthetic {
            tasks,
            features,
            samples_per_task,
            rank,
            noise_std,
        } => {
            let (full, truth) = generate_synthetic(
                *tasks,
                *features,
                *samples_per_task,
                *rank,
                *noise_std,
                derive_seed(cfg.seed, "dataset"),
            )?;
            Ok(ResolvedDataset {
                full,
                w_star: Some(truth.w_star),
            })
        }
        DatasetConfig::Csv { path } => Ok(ResolvedDataset {
            full: load_csv_tasks(path)?,
            w_star: None,
        }),
    }
}

/// Train/test data for one (rate, repetition) cell, after noise injection
/// and optional standardization.
pub struct RunData {
    pub train: MultiTaskDataset,
    pub test: MultiTaskDataset,
}

pub fn prepare_run(
    cfg: &ExperimentConfig,
    full: &MultiTaskDataset,
    rate_index: usize,
    rep: usize,
) -> Result<RunData> {
    let fraction = cfg.split.train_fractions[rate_index];
    let split = SplitSpec {
        train_fraction: fraction,
        seed: derive_seed(cfg.seed, &format!("split/{rate_index}/{rep}")),
        per_task: cfg.split.per_task,
    };
    let (mut train, mut test) = split_train_test(full, &split)?;
    if let Some(noise) = &cfg.noise {
        let spec = NoiseSpec {
            task_fraction: noise.task_fraction,
            mean: noise.mean,
            variance: noise.variance,
            variance_is_std: noise.variance_is_std,
            seed: derive_seed(cfg.seed, &format!("noise/{rate_index}/{rep}")),
        };
        train = inject_label_noise(&train, &spec)?;
    }
    if cfg.standardize {
        let (scaled, scaler) = standardize_features(&train)?;
        train = scaled;
        test = scaler.apply(&test)?;
    }
    Ok(RunData { train, test })
}

/// Fit one configured method on one training set.
pub fn fit_method(
    train: &MultiTaskDataset,
    method: &MethodConfig,
    seed: u64,
) -> Result<(ModelParams, FitReport)> {
    let config = method.solver_config(train.min_dim(), seed);
    match method.name {
        MethodName::Kmsv => solve_kmsv(train, &config),
        // trace is the plain-tail solver with the full tail
        MethodName::KmsvNew | MethodName::Trace => solve_kmsv_new(train, &config),
        MethodName::Ridge => solve_ridge(train, method.gamma),
    }
}

// ---------------------------------------------------------------------------
// file plumbing

/// Write via a temp file and rename, so partially written artifacts never
/// appear under their final name.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn run_dir(cfg: &ExperimentConfig, rate_index: usize, method: &MethodConfig, rep: usize) -> PathBuf {
    cfg.output_dir
        .join(ExperimentConfig::rate_tag(cfg.split.train_fractions[rate_index]))
        .join(method.name.dir_name())
        .join(format!("rep{rep}"))
}

fn write_config_echo(cfg: &ExperimentConfig) -> Result<()> {
    write_atomic(&cfg.output_dir.join("config_resolved.toml"), &cfg.echo())
}

/// model.csv: long format `task,kind,i,j,value` (weights then bias per task).
fn model_to_csv(params: &ModelParams) -> String {
    let mut text = String::from("task,kind,i,j,value\n");
    for t in 0..params.task_count() {
        let block = params.task_weights(t);
        for j in 0..block.ncols() {
            for i in 0..block.nrows() {
                let _ = writeln!(text, "{t},weight,{i},{j},{}", block[(i, j)]);
            }
        }
        for (j, value) in params.bias(t).iter().enumerate() {
            let _ = writeln!(text, "{t},bias,{j},0,{value}");
        }
    }
    text
}

fn model_from_csv(text: &str, dataset: &MultiTaskDataset) -> Result<ModelParams> {
    let d = dataset.feature_dim();
    let mut blocks: Vec<DMatrix<f64>> = dataset
        .tasks()
        .iter()
        .map(|task| DMatrix::zeros(d, task.output_dim()))
        .collect();
    let mut biases: Vec<DVector<f64>> = dataset
        .tasks()
        .iter()
        .map(|task| DVector::zeros(task.output_dim()))
        .collect();
    for (line_no, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let fail = |msg: String| Error::Format {
            line: (line_no + 1) as u64,
            msg,
        };
        if fields.len() != 5 {
            return Err(fail(format!("expected 5 fields, found {}", fields.len())));
        }
        let t: usize = fields[0].parse().map_err(|_| fail("bad task index".into()))?;
        if t >= blocks.len() {
            return Err(fail(format!("task index {t} out of range")));
        }
        let i: usize = fields[2].parse().map_err(|_| fail("bad row index".into()))?;
        let j: usize = fields[3].parse().map_err(|_| fail("bad column index".into()))?;
        let value: f64 = fields[4].parse().map_err(|_| fail("bad value".into()))?;
        match fields[1] {
            "weight" => {
                if i >= d || j >= blocks[t].ncols() {
                    return Err(fail(format!("weight index ({i}, {j}) out of range")));
                }
                blocks[t][(i, j)] = value;
            }
            "bias" => {
                if i >= biases[t].len() {
                    return Err(fail(format!("bias index {i} out of range")));
                }
                biases[t][i] = value;
            }
            other => return Err(fail(format!("unknown kind `{other}`"))),
        }
    }
    ModelParams::from_blocks(blocks, biases)
}

fn fit_meta_to_csv(report: &FitReport) -> String {
    format!(
        "iterations,converged,wall_time,initial_objective\n{},{},{},{}\n",
        report.iterations, report.converged, report.wall_time, report.initial_objective
    )
}

struct FitMeta {
    wall_time: f64,
}

fn fit_meta_from_csv(text: &str) -> Result<FitMeta> {
    let line = text.lines().nth(1).ok_or_else(|| Error::Format {
        line: 2,
        msg: "fit_meta.csv has no data row".into(),
    })?;
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 4 {
        return Err(Error::Format {
            line: 2,
            msg: "fit_meta.csv must have 4 fields".into(),
        });
    }
    Ok(FitMeta {
        wall_time: fields[2].parse().map_err(|_| Error::Format {
            line: 2,
            msg: "bad wall_time".into(),
        })?,
    })
}

// ---------------------------------------------------------------------------
// commands

/// Export the configured synthetic dataset as task and ground-truth CSVs.
pub fn cmd_synth(cfg: &ExperimentConfig) -> Result<()> {
    let DatasetConfig::Synthetic {
        tasks,
        features,
        samples_per_task,
        ..
    } = &cfg.dataset
    else {
        return Err(Error::InvalidParameter(
            "synth requires dataset.kind = \"synthetic\"".into(),
        ));
    };
    let resolved = resolve_dataset(cfg)?;
    write_config_echo(cfg)?;

    let mut tasks_csv = Vec::new();
    write_csv_tasks(&resolved.full, &mut tasks_csv)?;
    write_atomic(
        &cfg.output_dir.join("tasks.csv"),
        std::str::from_utf8(&tasks_csv).expect("csv is utf-8"),
    )?;

    let w_star = resolved.w_star.expect("synthetic data has a ground truth");
    let mut wstar_csv = Vec::new();
    write_matrix_csv(&w_star, &mut wstar_csv)?;
    write_atomic(
        &cfg.output_dir.join("wstar.csv"),
        std::str::from_utf8(&wstar_csv).expect("csv is utf-8"),
    )?;

    println!(
        "synth: T={tasks} d={features} n={samples_per_task} seed={} -> {}",
        cfg.seed,
        cfg.output_dir.display()
    );
    Ok(())
}

/// Fit every configured method for every training rate and repetition.
pub fn cmd_fit(cfg: &ExperimentConfig) -> Result<()> {
    let resolved = resolve_dataset(cfg)?;
    write_config_echo(cfg)?;
    for rate_index in 0..cfg.split.train_fractions.len() {
        for rep in 0..cfg.repetitions {
            let run = prepare_run(cfg, &resolved.full, rate_index, rep)?;
            for method in &cfg.methods {
                let seed = derive_seed(
                    cfg.seed,
                    &format!("fit/{rate_index}/{rep}/{}", method.name),
                );
                let (params, report) = fit_method(&run.train, method, seed)?;
                let dir = run_dir(cfg, rate_index, method, rep);
                write_atomic(&dir.join("model.csv"), &model_to_csv(&params))?;
                write_atomic(&dir.join("fit_meta.csv"), &fit_meta_to_csv(&report))?;
                let mut buf = Vec::new();
                write_convergence_csv(&mut buf, &report.objective_trace)?;
                write_atomic(
                    &dir.join("convergence.csv"),
                    std::str::from_utf8(&buf).expect("csv is utf-8"),
                )?;
                let mut buf = Vec::new();
                write_spectrum_csv(&mut buf, &report.final_spectrum)?;
                write_atomic(
                    &dir.join("spectrum.csv"),
                    std::str::from_utf8(&buf).expect("csv is utf-8"),
                )?;
                println!(
                    "fit: rate={} rep={rep} method={} iterations={} converged={} ({:.3}s)",
                    cfg.split.train_fractions[rate_index],
                    method.name,
                    report.iterations,
                    report.converged,
                    report.wall_time
                );
            }
        }
    }
    Ok(())
}

struct EvalCell {
    method: MethodName,
    rate: f64,
    report: MetricReport,
}

/// Evaluate fitted models, write per-run metric files, and aggregate the
/// rate sweep. With `plot`, also emit SVG charts.
pub fn cmd_eval(cfg: &ExperimentConfig, plot: bool) -> Result<()> {
    let resolved = resolve_dataset(cfg)?;
    write_config_echo(cfg)?;
    let hash = cfg.hash();
    let mut cells: Vec<EvalCell> = Vec::new();

    for rate_index in 0..cfg.split.train_fractions.len() {
        let rate = cfg.split.train_fractions[rate_index];
        for rep in 0..cfg.repetitions {
            let run = prepare_run(cfg, &resolved.full, rate_index, rep)?;
            for method in &cfg.methods {
                let dir = run_dir(cfg, rate_index, method, rep);
                let model_path = dir.join("model.csv");
                if !model_path.exists() {
                    return Err(Error::InvalidParameter(format!(
                        "no fitted model at {}; run `kmsv fit` with this config first",
                        model_path.display()
                    )));
                }
                let params = model_from_csv(&fs::read_to_string(&model_path)?, &run.test)?;
                let meta = fit_meta_from_csv(&fs::read_to_string(dir.join("fit_meta.csv"))?)?;

                let mut metadata = BTreeMap::new();
                metadata.insert("method".into(), method.name.to_string());
                metadata.insert("train_fraction".into(), rate.to_string());
                metadata.insert("repetition".into(), rep.to_string());
                metadata.insert("seed".into(), cfg.seed.to_string());
                metadata.insert("config_hash".into(), hash.clone());
                if let Some(noise) = &cfg.noise {
                    metadata.insert(
                        "noise_convention".into(),
                        if noise.variance_is_std {
                            format!("gaussian(mean={}, std={})", noise.mean, noise.variance)
                        } else {
                            format!("gaussian(mean={}, variance={})", noise.mean, noise.variance)
                        },
                    );
                }
                let report = evaluate(&params, &run.test, resolved.w_star.as_ref(), metadata)?;

                let ids: Vec<String> = (0..run.test.task_count())
                    .map(|t| run.test.task_label(t))
                    .collect();
                let mut buf = Vec::new();
                write_metrics_csv(&mut buf, &ids, &report.nmse_per_task)?;
                write_atomic(
                    &dir.join("metrics.csv"),
                    std::str::from_utf8(&buf).expect("csv is utf-8"),
                )?;
                let mut buf = Vec::new();
                write_summary_csv(
                    &mut buf,
                    &SummaryRow {
                        nmse_mean: report.nmse_mean,
                        nmse_pooled: report.nmse_pooled,
                        ew: report.ew,
                        runtime: meta.wall_time,
                        config_hash: hash.clone(),
                    },
                )?;
                write_atomic(
                    &dir.join("summary.csv"),
                    std::str::from_utf8(&buf).expect("csv is utf-8"),
                )?;
                println!(
                    "eval: rate={rate} rep={rep} method={} nmse={:.6}{}",
                    method.name,
                    report.nmse_mean,
                    report
                        .ew
                        .map(|e| format!(" ew={e:.6}"))
                        .unwrap_or_default()
                );
                cells.push(EvalCell {
                    method: method.name,
                    rate,
                    report,
                });
            }
        }
    }

    write_rate_sweep(cfg, &cells)?;
    if plot {
        write_plots(cfg, &cells)?;
    }
    Ok(())
}

/// nmse_vs_ratio.csv: per (method, rate), metric means over repetitions.
fn write_rate_sweep(cfg: &ExperimentConfig, cells: &[EvalCell]) -> Result<()> {
    let mut text = String::from("method,train_fraction,nmse_mean,nmse_pooled,ew\n");
    for method in &cfg.methods {
        for &rate in &cfg.split.train_fractions {
            let group: Vec<&EvalCell> = cells
                .iter()
                .filter(|c| c.method == method.name && c.rate == rate)
                .collect();
            if group.is_empty() {
                continue;
            }
            let n = group.len() as f64;
            let nmse = group.iter().map(|c| c.report.nmse_mean).sum::<f64>() / n;
            let pooled = group.iter().map(|c| c.report.nmse_pooled).sum::<f64>() / n;
            let ew = if group.iter().all(|c| c.report.ew.is_some()) {
                let v = group.iter().map(|c| c.report.ew.unwrap()).sum::<f64>() / n;
                v.to_string()
            } else {
                String::new()
            };
            let _ = writeln!(text, "{},{rate},{nmse},{pooled},{ew}", method.name);
        }
    }
    write_atomic(&cfg.output_dir.join("nmse_vs_ratio.csv"), &text)
}

fn write_plots(cfg: &ExperimentConfig, cells: &[EvalCell]) -> Result<()> {
    // nMSE against training rate, one line per method
    let mut nmse_series = Vec::new();
    for method in &cfg.methods {
        let mut points = Vec::new();
        for &rate in &cfg.split.train_fractions {
            let group: Vec<f64> = cells
                .iter()
                .filter(|c| c.method == method.name && c.rate == rate)
                .map(|c| c.report.nmse_mean)
                .collect();
            if !group.is_empty() {
                points.push((rate, group.iter().sum::<f64>() / group.len() as f64));
            }
        }
        nmse_series.push(Series {
            label: method.name.to_string(),
            points,
        });
    }
    write_atomic(
        &cfg.output_dir.join("nmse_vs_ratio.svg"),
        &render_line_chart(
            "mean nMSE vs training rate",
            "training rate",
            "nMSE",
            &nmse_series,
            false,
        ),
    )?;

    // spectrum and convergence at the first rate, first repetition
    let first_rate = cfg.split.train_fractions[0];
    let mut spectrum_series = Vec::new();
    let mut convergence_series = Vec::new();
    for method in &cfg.methods {
        if let Some(cell) = cells
            .iter()
            .find(|c| c.method == method.name && c.rate == first_rate)
        {
            spectrum_series.push(Series {
                label: method.name.to_string(),
                points: cell
                    .report
                    .spectrum
                    .descending()
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| ((i + 1) as f64, v))
                    .collect(),
            });
        }
        let dir = run_dir(cfg, 0, method, 0);
        if let Ok(text) = fs::read_to_string(dir.join("convergence.csv")) {
            let points: Vec<(f64, f64)> = text
                .lines()
                .skip(1)
                .filter_map(|line| {
                    let mut parts = line.split(',');
                    let x: f64 = parts.next()?.parse().ok()?;
                    let y: f64 = parts.next()?.parse().ok()?;
                    Some((x, y))
                })
                .collect();
            if !points.is_empty() {
                convergence_series.push(Series {
                    label: method.name.to_string(),
                    points,
                });
            }
        }
    }
    write_atomic(
        &cfg.output_dir.join("spectrum.svg"),
        &render_line_chart(
            "singular values of the fitted W",
            "index",
            "singular value",
            &spectrum_series,
            true,
        ),
    )?;
    write_atomic(
        &cfg.output_dir.join("convergence.svg"),
        &render_line_chart(
            "objective per iteration",
            "iteration",
            "objective",
            &convergence_series,
            false,
        ),
    )?;
    Ok(())
}

/// Aggregate every summary.csv under the output directory into report.csv
/// with mean and sample standard deviation per (method, rate).
pub fn cmd_report(cfg: &ExperimentConfig) -> Result<()> {
    write_config_echo(cfg)?;
    let mut text = String::from(
        "method,train_fraction,repetitions,nmse_mean_avg,nmse_mean_std,nmse_pooled_avg,nmse_pooled_std,ew_avg,ew_std\n",
    );
    let mut printed = Vec::new();
    for method in &cfg.methods {
        for (rate_index, &rate) in cfg.split.train_fractions.iter().enumerate() {
            let mut nmse = Vec::new();
            let mut pooled = Vec::new();
            let mut ew = Vec::new();
            for rep in 0..cfg.repetitions {
                let path = run_dir(cfg, rate_index, method, rep).join("summary.csv");
                let Ok(contents) = fs::read_to_string(&path) else {
                    continue;
                };
                let Some(line) = contents.lines().nth(1) else {
                    continue;
                };
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() < 4 {
                    return Err(Error::Format {
                        line: 2,
                        msg: format!("malformed summary at {}", path.display()),
                    });
                }
                nmse.push(fields[0].parse::<f64>().map_err(|_| Error::Format {
                    line: 2,
                    msg: format!("bad nmse_mean in {}", path.display()),
                })?);
                pooled.push(fields[1].parse::<f64>().unwrap_or(f64::NAN));
                if !fields[2].is_empty() {
                    ew.push(fields[2].parse::<f64>().unwrap_or(f64::NAN));
                }
            }
            if nmse.is_empty() {
                continue;
            }
            let stats = |values: &[f64]| -> (f64, f64) {
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                let std = if values.len() > 1 {
                    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0))
                        .sqrt()
                } else {
                    0.0
                };
                (mean, std)
            };
            let (nm, ns) = stats(&nmse);
            let (pm, ps) = stats(&pooled);
            let (ew_text, ew_std_text) = if ew.len() == nmse.len() {
                let (em, es) = stats(&ew);
                (em.to_string(), es.to_string())
            } else {
                (String::new(), String::new())
            };
            let _ = writeln!(
                text,
                "{},{rate},{},{nm},{ns},{pm},{ps},{ew_text},{ew_std_text}",
                method.name,
                nmse.len()
            );
            printed.push(format!(
                "report: method={} rate={rate} reps={} nmse={nm:.6} (±{ns:.6})",
                method.name,
                nmse.len()
            ));
        }
    }
    if printed.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no summaries found under {}; run `kmsv fit` and `kmsv eval` first",
            cfg.output_dir.display()
        )));
    }
    write_atomic(&cfg.output_dir.join("report.csv"), &text)?;
    for line in printed {
        println!("{line}");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, Overrides};

    fn desk_config(dir: &Path) -> ExperimentConfig {
        let text = format!(
            r#"
seed = 11
output_dir = "{}"
repetitions = 2

[dataset]
kind = "synthetic"
tasks = 6
features = 8
samples_per_task = 24
rank = 2
noise_std = 0.5

[split]
train_fractions = [0.5]

[[methods]]
name = "kmsv"
k = 4
max_iter = 20

[[methods]]
name = "ridge"
lambda = 1.0
"#,
            dir.display()
        );
        parse_config(&text, &Overrides::default()).unwrap()
    }

    #[test]
    fn model_csv_round_trips_exactly() {
        let cfg = desk_config(Path::new("/tmp/unused"));
        let resolved = resolve_dataset(&cfg).unwrap();
        let run = prepare_run(&cfg, &resolved.full, 0, 0).unwrap();
        let (params, _) = fit_method(&run.train, &cfg.methods[0], 3).unwrap();
        let text = model_to_csv(&params);
        let reloaded = model_from_csv(&text, &run.train).unwrap();
        assert_eq!(params.stacked(), reloaded.stacked());
        for t in 0..params.task_count() {
            assert_eq!(params.bias(t), reloaded.bias(t));
        }
    }

    #[test]
    fn fit_and_eval_produce_all_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = desk_config(dir.path());
        cmd_fit(&cfg).unwrap();
        cmd_eval(&cfg, true).unwrap();
        cmd_report(&cfg).unwrap();
        for method in ["kmsv", "ridge"] {
            for rep in 0..2 {
                let run = dir.path().join("rate0p5").join(method).join(format!("rep{rep}"));
                for file in [
                    "model.csv",
                    "fit_meta.csv",
                    "convergence.csv",
                    "spectrum.csv",
                    "metrics.csv",
                    "summary.csv",
                ] {
                    assert!(run.join(file).exists(), "{method}/rep{rep}/{file}");
                }
            }
        }
        for file in [
            "config_resolved.toml",
            "nmse_vs_ratio.csv",
            "report.csv",
            "nmse_vs_ratio.svg",
            "spectrum.svg",
            "convergence.svg",
        ] {
            assert!(dir.path().join(file).exists(), "{file}");
        }
        // one sweep row per (method, training rate)
        let sweep = fs::read_to_string(dir.path().join("nmse_vs_ratio.csv")).unwrap();
        let rows: Vec<&str> = sweep.lines().collect();
        assert_eq!(rows[0], "method,train_fraction,nmse_mean,nmse_pooled,ew");
        assert_eq!(rows.len(), 1 + 2, "2 methods × 1 rate");
        assert!(rows[1].starts_with("kmsv,0.5,"));
        assert!(rows[2].starts_with("ridge,0.5,"));
    }

    #[test]
    fn eval_without_fit_is_a_descriptive_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = desk_config(dir.path());
        let err = cmd_eval(&cfg, false).unwrap_err();
        assert!(err.to_string().contains("kmsv fit"));
    }

    #[test]
    fn synth_writes_dataset_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = desk_config(dir.path());
        cmd_synth(&cfg).unwrap();
        assert!(dir.path().join("tasks.csv").exists());
        assert!(dir.path().join("wstar.csv").exists());
        let loaded = kmsv::data::load_csv_tasks(dir.path().join("tasks.csv")).unwrap();
        assert_eq!(loaded.task_count(), 6);
        assert_eq!(loaded.feature_dim(), 8);
    }
}
