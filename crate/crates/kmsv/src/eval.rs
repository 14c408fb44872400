//! Prediction and evaluation metrics.
//!
//! nMSE is the per-task mean squared prediction error normalized by the
//! population variance of that task's true targets, averaged uniformly over
//! tasks; smaller is better. A pooled variant (all test samples lumped
//! together) is emitted next to it since aggregation conventions differ
//! between published tables. Weight-recovery error against a synthetic
//! ground truth is ‖W − W*‖_F²/T.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::solvers::{FitReport, ModelParams, MultiTaskDataset};
use crate::spectral::{self, SpectrumView};

/// Everything one evaluation run produces.
#[derive(Debug, Clone)]
pub struct MetricReport {
    pub nmse_per_task: Vec<f64>,
    /// Uniform average of the per-task values.
    pub nmse_mean: f64,
    /// All test samples pooled before normalizing.
    pub nmse_pooled: f64,
    /// ‖W − W*‖_F²/T; present only when a ground truth was supplied.
    pub ew: Option<f64>,
    /// Spectrum of the evaluated stacked W.
    pub spectrum: SpectrumView,
    /// Config echo, seeds, and protocol notes; emitted with every report.
    pub metadata: BTreeMap<String, String>,
}

/// W_t'·X_new + b_t·1'.
pub fn predict(
    params: &ModelParams,
    task_index: usize,
    x_new: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if task_index >= params.task_count() {
        return Err(Error::InvalidInput(format!(
            "task index {task_index} out of range ({} tasks)",
            params.task_count()
        )));
    }
    if x_new.nrows() != params.feature_dim() {
        return Err(Error::InvalidInput(format!(
            "features have {} rows, model expects {}",
            x_new.nrows(),
            params.feature_dim()
        )));
    }
    let mut pred = params.task_weights(task_index).transpose() * x_new;
    for mut col in pred.column_iter_mut() {
        col += params.bias(task_index);
    }
    Ok(pred)
}

fn population_variance(truth: &DMatrix<f64>) -> f64 {
    let n = (truth.nrows() * truth.ncols()) as f64;
    let mean = truth.iter().sum::<f64>() / n;
    truth.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Per-task MSE divided by the population variance of the true targets,
/// plus the uniform mean over tasks.
pub fn nmse(predictions: &[DMatrix<f64>], truths: &[DMatrix<f64>]) -> Result<(Vec<f64>, f64)> {
    if predictions.len() != truths.len() || predictions.is_empty() {
        return Err(Error::InvalidInput(
            "predictions and truths must be non-empty and aligned".into(),
        ));
    }
    let mut per_task = Vec::with_capacity(predictions.len());
    for (t, (pred, truth)) in predictions.iter().zip(truths).enumerate() {
        if pred.shape() != truth.shape() {
            return Err(Error::InvalidInput(format!(
                "task {t}: prediction shape {:?} does not match truth {:?}",
                pred.shape(),
                truth.shape()
            )));
        }
        let var = population_variance(truth);
        if var <= 0.0 {
            return Err(Error::Metric(format!(
                "task {t} has zero-variance targets; nMSE is undefined"
            )));
        }
        let n = (truth.nrows() * truth.ncols()) as f64;
        let mse = (pred - truth).norm_squared() / n;
        per_task.push(mse / var);
    }
    let mean = per_task.iter().sum::<f64>() / per_task.len() as f64;
    Ok((per_task, mean))
}

/// Pooled nMSE: total squared error over all tasks divided by the total
/// squared deviation of the pooled truths from their pooled mean.
pub fn nmse_pooled(predictions: &[DMatrix<f64>], truths: &[DMatrix<f64>]) -> Result<f64> {
    if predictions.len() != truths.len() || predictions.is_empty() {
        return Err(Error::InvalidInput(
            "predictions and truths must be non-empty and aligned".into(),
        ));
    }
    let mut count = 0.0;
    let mut total = 0.0;
    for truth in truths {
        count += (truth.nrows() * truth.ncols()) as f64;
        total += truth.iter().sum::<f64>();
    }
    let mean = total / count;
    let mut err = 0.0;
    let mut dev = 0.0;
    for (pred, truth) in predictions.iter().zip(truths) {
        if pred.shape() != truth.shape() {
            return Err(Error::InvalidInput("prediction/truth shape mismatch".into()));
        }
        err += (pred - truth).norm_squared();
        dev += truth.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    }
    if dev <= 0.0 {
        return Err(Error::Metric("pooled targets have zero variance".into()));
    }
    Ok(err / dev)
}

/// ‖W − W*‖_F² / tasks.
pub fn explained_weight_error(
    w: &DMatrix<f64>,
    w_star: &DMatrix<f64>,
    tasks: usize,
) -> Result<f64> {
    if w.shape() != w_star.shape() {
        return Err(Error::InvalidInput(format!(
            "weight shape {:?} does not match ground truth {:?}",
            w.shape(),
            w_star.shape()
        )));
    }
    if tasks == 0 {
        return Err(Error::InvalidParameter("task count must be positive".into()));
    }
    Ok((w - w_star).norm_squared() / tasks as f64)
}

/// Spectrum of the fitted stacked W (retrieve descending via
/// [`SpectrumView::descending`]).
pub fn export_spectrum(params: &ModelParams) -> Result<SpectrumView> {
    spectral::singular_spectrum(params.stacked())
}

/// Objective series in iteration order.
pub fn export_convergence(report: &FitReport) -> &[f64] {
    &report.objective_trace
}

/// Predict every task of `test` and assemble the full metric report.
pub fn evaluate(
    params: &ModelParams,
    test: &MultiTaskDataset,
    w_star: Option<&DMatrix<f64>>,
    metadata: BTreeMap<String, String>,
) -> Result<MetricReport> {
    let mut predictions = Vec::with_capacity(test.task_count());
    let mut truths = Vec::with_capacity(test.task_count());
    for (t, task) in test.tasks().iter().enumerate() {
        predictions.push(predict(params, t, task.features())?);
        truths.push(task.targets().clone());
    }
    let (nmse_per_task, nmse_mean) = nmse(&predictions, &truths)?;
    let pooled = nmse_pooled(&predictions, &truths)?;
    let ew = match w_star {
        Some(ws) => Some(explained_weight_error(params.stacked(), ws, test.task_count())?),
        None => None,
    };
    Ok(MetricReport {
        nmse_per_task,
        nmse_mean,
        nmse_pooled: pooled,
        ew,
        spectrum: export_spectrum(params)?,
        metadata,
    })
}

/// One row of `summary.csv`.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub nmse_mean: f64,
    pub nmse_pooled: f64,
    pub ew: Option<f64>,
    /// Fit wall time in seconds.
    pub runtime: f64,
    pub config_hash: String,
}

/// `metrics.csv`: task_id, nmse.
pub fn write_metrics_csv<W: Write>(mut out: W, ids: &[String], nmse: &[f64]) -> Result<()> {
    if ids.len() != nmse.len() {
        return Err(Error::InvalidInput("ids and nmse values must align".into()));
    }
    writeln!(out, "task_id,nmse")?;
    for (id, value) in ids.iter().zip(nmse) {
        writeln!(out, "{id},{value}")?;
    }
    Ok(())
}

/// `summary.csv`: nmse_mean, nmse_pooled, ew, runtime, config_hash.
/// `ew` is left empty when no ground truth was available.
pub fn write_summary_csv<W: Write>(mut out: W, row: &SummaryRow) -> Result<()> {
    writeln!(out, "nmse_mean,nmse_pooled,ew,runtime,config_hash")?;
    let ew = row.ew.map(|v| v.to_string()).unwrap_or_default();
    writeln!(
        out,
        "{},{},{},{},{}",
        row.nmse_mean, row.nmse_pooled, ew, row.runtime, row.config_hash
    )?;
    Ok(())
}

/// `spectrum.csv`: index, singular_value — descending, 1-based index.
pub fn write_spectrum_csv<W: Write>(mut out: W, spectrum: &SpectrumView) -> Result<()> {
    writeln!(out, "index,singular_value")?;
    for (i, value) in spectrum.descending().iter().enumerate() {
        writeln!(out, "{},{}", i + 1, value)?;
    }
    Ok(())
}

/// `convergence.csv`: iteration, objective — 1-based iterations.
pub fn write_convergence_csv<W: Write>(mut out: W, trace: &[f64]) -> Result<()> {
    writeln!(out, "iteration,objective")?;
    for (i, value) in trace.iter().enumerate() {
        writeln!(out, "{},{}", i + 1, value)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_synthetic;
    use crate::solvers::{solve_ridge, ModelParams};
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn toy_params(d: usize, widths: &[usize], fill: f64) -> ModelParams {
        let blocks: Vec<DMatrix<f64>> = widths
            .iter()
            .map(|&w| DMatrix::from_element(d, w, fill))
            .collect();
        let biases: Vec<DVector<f64>> = widths.iter().map(|&w| DVector::zeros(w)).collect();
        ModelParams::from_blocks(blocks, biases).unwrap()
    }

    #[test]
    fn predict_zero_weights_returns_bias() {
        let blocks = vec![DMatrix::zeros(2, 1)];
        let biases = vec![DVector::from_element(1, 4.5)];
        let params = ModelParams::from_blocks(blocks, biases).unwrap();
        let x = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let pred = predict(&params, 0, &x).unwrap();
        assert!(pred.iter().all(|&v| v == 4.5));
    }

    #[test]
    fn predict_identity_case() {
        let params = toy_params(1, &[1], 1.0);
        let x = DMatrix::from_row_slice(1, 1, &[3.0]);
        let pred = predict(&params, 0, &x).unwrap();
        assert_eq!(pred[(0, 0)], 3.0);
    }

    #[test]
    fn predict_matches_direct_product() {
        let (dataset, _) = generate_synthetic(3, 4, 8, 1, 0.3, 50).unwrap();
        let (params, _) = solve_ridge(&dataset, 0.1).unwrap();
        for (t, task) in dataset.tasks().iter().enumerate() {
            let direct = params.task_weights(t).transpose() * task.features()
                + params.bias(t) * DMatrix::from_element(1, task.sample_count(), 1.0);
            let pred = predict(&params, t, task.features()).unwrap();
            assert!((pred - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn predict_is_linear_without_bias() {
        let params = toy_params(3, &[2], 0.7);
        let x1 = DMatrix::from_fn(3, 4, |i, j| (i + 2 * j) as f64);
        let x2 = DMatrix::from_fn(3, 4, |i, j| (2 * i + j) as f64 * 0.5);
        let combo = &x1 * 2.0 + &x2 * (-3.0);
        let lhs = predict(&params, 0, &combo).unwrap();
        let rhs = predict(&params, 0, &x1).unwrap() * 2.0 + predict(&params, 0, &x2).unwrap() * (-3.0);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn predict_rejects_bad_shapes() {
        let params = toy_params(3, &[1], 0.0);
        let x = DMatrix::zeros(2, 4);
        assert!(matches!(predict(&params, 0, &x), Err(Error::InvalidInput(_))));
        assert!(matches!(
            predict(&params, 5, &DMatrix::zeros(3, 1)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn nmse_perfect_and_mean_predictor() {
        let truth = vec![DMatrix::from_row_slice(1, 4, &[1.0, 2.0, 3.0, 4.0])];
        let (per, mean) = nmse(&truth.clone(), &truth).unwrap();
        assert_eq!(per, vec![0.0]);
        assert_eq!(mean, 0.0);
        // constant predictor at the truth mean scores exactly 1
        let pred = vec![DMatrix::from_element(1, 4, 2.5)];
        let (per, mean) = nmse(&pred, &truth).unwrap();
        assert_relative_eq!(per[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(mean, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn nmse_hand_computed_example() {
        let truth = vec![DMatrix::from_row_slice(1, 2, &[0.0, 2.0])];
        let pred = vec![DMatrix::from_row_slice(1, 2, &[1.0, 1.0])];
        let (per, _) = nmse(&pred, &truth).unwrap();
        assert_relative_eq!(per[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn nmse_rejects_zero_variance() {
        let truth = vec![DMatrix::from_element(1, 3, 2.0)];
        let pred = vec![DMatrix::from_element(1, 3, 2.0)];
        match nmse(&pred, &truth) {
            Err(Error::Metric(msg)) => assert!(msg.contains("task 0")),
            other => panic!("expected metric error, got {other:?}"),
        }
    }

    #[test]
    fn nmse_is_scale_covariant() {
        let truth = vec![
            DMatrix::from_row_slice(1, 3, &[1.0, -2.0, 0.5]),
            DMatrix::from_row_slice(1, 2, &[3.0, 1.0]),
        ];
        let pred = vec![
            DMatrix::from_row_slice(1, 3, &[0.8, -1.5, 0.9]),
            DMatrix::from_row_slice(1, 2, &[2.0, 1.5]),
        ];
        let (per, _) = nmse(&pred, &truth).unwrap();
        let alpha = -7.25;
        let scaled_truth: Vec<_> = truth.iter().map(|m| m * alpha).collect();
        let scaled_pred: Vec<_> = pred.iter().map(|m| m * alpha).collect();
        let (per_scaled, _) = nmse(&scaled_pred, &scaled_truth).unwrap();
        for (a, b) in per.iter().zip(&per_scaled) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn ew_examples() {
        let w = DMatrix::from_element(2, 2, 1.0);
        let ws = DMatrix::zeros(2, 2);
        assert_relative_eq!(explained_weight_error(&w, &w, 2).unwrap(), 0.0);
        assert_relative_eq!(explained_weight_error(&w, &ws, 2).unwrap(), 2.0);
        // elementwise oracle on random matrices
        let a = DMatrix::from_fn(3, 4, |i, j| ((i * 5 + j) as f64).sin());
        let b = DMatrix::from_fn(3, 4, |i, j| ((i + j * 3) as f64).cos());
        let oracle: f64 = a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            / 4.0;
        assert_relative_eq!(
            explained_weight_error(&a, &b, 4).unwrap(),
            oracle,
            epsilon = 1e-12
        );
        assert!(matches!(
            explained_weight_error(&a, &DMatrix::zeros(2, 2), 4),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn evaluate_assembles_report() {
        let (dataset, truth) = generate_synthetic(4, 5, 30, 2, 0.1, 51).unwrap();
        let (params, report) = solve_ridge(&dataset, 0.5).unwrap();
        let metrics = evaluate(&params, &dataset, Some(&truth.w_star), BTreeMap::new()).unwrap();
        assert_eq!(metrics.nmse_per_task.len(), 4);
        assert!(metrics.ew.is_some());
        assert!(metrics.nmse_mean < 1.0); // fits its own training data
        let no_truth = evaluate(&params, &dataset, None, BTreeMap::new()).unwrap();
        assert!(no_truth.ew.is_none());
        assert_eq!(export_convergence(&report).len(), report.iterations);
    }

    #[test]
    fn csv_writers_fixed_columns() {
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &["a".into(), "b".into()], &[0.5, 0.25]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "task_id,nmse\na,0.5\nb,0.25\n");

        let mut buf = Vec::new();
        write_summary_csv(
            &mut buf,
            &SummaryRow {
                nmse_mean: 0.5,
                nmse_pooled: 0.4,
                ew: None,
                runtime: 1.25,
                config_hash: "abc".into(),
            },
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "nmse_mean,nmse_pooled,ew,runtime,config_hash\n0.5,0.4,,1.25,abc\n"
        );

        let spectrum = singular_spectrum_for_test();
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &spectrum).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,singular_value\n1,"));

        let mut buf = Vec::new();
        write_convergence_csv(&mut buf, &[3.0, 2.0]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "iteration,objective\n1,3\n2,2\n");
    }

    fn singular_spectrum_for_test() -> SpectrumView {
        let w = DMatrix::from_diagonal(&DVector::from_row_slice(&[2.0, 1.0]));
        spectral::singular_spectrum(&w).unwrap()
    }
}
