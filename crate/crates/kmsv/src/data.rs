//! Dataset plumbing: synthetic low-rank generation, CSV ingestion,
//! train/test splitting, and label-noise injection.
//!
//! Every operation is a pure function of its inputs and a seed; repeated
//! calls agree bitwise. Randomness is drawn from per-operation streams
//! derived from `(seed, tag)` so that reordering or parallelising calls
//! cannot change any result.
//!
//! The task CSV format (UTF-8, header required) is
//!
//! ```text
//! task_id,y,f1,...,fd          # scalar targets, or
//! task_id,y1,...,yc,f1,...,fd  # multi-output targets
//! ```
//!
//! Rows may be grouped or interleaved arbitrarily; tasks appear in the
//! output in first-appearance order, row order preserved within a task.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::solvers::{MultiTaskDataset, TaskData};
use crate::spectral;

/// Ground truth behind a synthetic dataset.
#[derive(Debug, Clone)]
pub struct SyntheticGroundTruth {
    /// True d×T weight matrix of exact rank `rank`.
    pub w_star: DMatrix<f64>,
    pub rank: usize,
    pub noise_std: f64,
    pub seed: u64,
}

/// Per-task train/test split protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Fraction of each task's samples used for training, in (0, 1).
    pub train_fraction: f64,
    pub seed: u64,
    /// Sample within each task (the usual protocol). When false a single
    /// pooled shuffle decides membership; every task must still retain at
    /// least one sample on each side.
    pub per_task: bool,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Self {
        SplitSpec {
            train_fraction,
            seed,
            per_task: true,
        }
    }
}

/// Gaussian label-corruption protocol: a seeded fraction of tasks gets
/// i.i.d. noise added to every target entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Fraction of tasks to corrupt, in [0, 1].
    pub task_fraction: f64,
    pub mean: f64,
    /// Second Gaussian parameter; a variance by default.
    pub variance: f64,
    /// Read `variance` as a standard deviation instead. The choice is echoed
    /// into every report so results stay interpretable.
    pub variance_is_std: bool,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(task_fraction: f64, mean: f64, variance: f64, seed: u64) -> Self {
        NoiseSpec {
            task_fraction,
            mean,
            variance,
            variance_is_std: false,
            seed,
        }
    }

    fn std_dev(&self) -> f64 {
        if self.variance_is_std {
            self.variance
        } else {
            self.variance.sqrt()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.task_fraction) {
            return Err(Error::InvalidParameter(format!(
                "task_fraction = {} must lie in [0, 1]",
                self.task_fraction
            )));
        }
        if !self.variance.is_finite() || self.variance < 0.0 || !self.mean.is_finite() {
            return Err(Error::InvalidParameter(
                "noise mean must be finite and variance non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Generate T regression tasks sharing a rank-`rank` ground truth.
///
/// Features are i.i.d. standard normal, W* = A·B' with standard-normal
/// factors A (d×rank) and B (T×rank), and targets are W*_t'·X_t plus
/// N(0, noise_std²) noise. One scalar output per task.
pub fn generate_synthetic(
    tasks: usize,
    features: usize,
    samples_per_task: usize,
    rank: usize,
    noise_std: f64,
    seed: u64,
) -> Result<(MultiTaskDataset, SyntheticGroundTruth)> {
    if tasks == 0 || features == 0 {
        return Err(Error::InvalidParameter(
            "tasks and features must be positive".into(),
        ));
    }
    if samples_per_task == 0 {
        return Err(Error::InvalidParameter("samples_per_task must be ≥ 1".into()));
    }
    if rank > tasks.min(features) {
        return Err(Error::InvalidParameter(format!(
            "rank = {rank} exceeds min(d, T) = {}",
            tasks.min(features)
        )));
    }
    if !noise_std.is_finite() || noise_std < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "noise_std = {noise_std} must be finite and non-negative"
        )));
    }

    let mut rng_a = rng::stream(seed, "synthetic/factor-a");
    let a: DMatrix<f64> = DMatrix::from_fn(features, rank, |_, _| rng_a.sample(StandardNormal));
    let mut rng_b = rng::stream(seed, "synthetic/factor-b");
    let b: DMatrix<f64> = DMatrix::from_fn(tasks, rank, |_, _| rng_b.sample(StandardNormal));
    let w_star = &a * b.transpose();

    // rank holds almost surely for Gaussian factors; verify anyway
    if rank < tasks.min(features) && rank > 0 {
        let spectrum = spectral::singular_spectrum(&w_star)?;
        let values = spectrum.values();
        let top = spectrum.largest();
        let gap = values[values.len() - rank - 1];
        if gap > 1e-10 * top {
            return Err(Error::Numerical(format!(
                "generated ground truth is not rank {rank}: σ_{} = {gap:e}",
                rank + 1
            )));
        }
    }

    let mut task_list = Vec::with_capacity(tasks);
    for t in 0..tasks {
        let mut rng_x = rng::stream(seed, &format!("synthetic/x/{t}"));
        let x = DMatrix::from_fn(features, samples_per_task, |_, _| rng_x.sample(StandardNormal));
        let w_t = w_star.column(t);
        let mut y = DMatrix::from_fn(1, samples_per_task, |_, j| w_t.dot(&x.column(j)));
        if noise_std > 0.0 {
            let mut rng_y = rng::stream(seed, &format!("synthetic/y-noise/{t}"));
            for v in y.iter_mut() {
                let noise: f64 = rng_y.sample(StandardNormal);
                *v += noise_std * noise;
            }
        }
        task_list.push(TaskData::with_id(format!("task{t}"), x, y)?);
    }

    Ok((
        MultiTaskDataset::new(task_list)?,
        SyntheticGroundTruth {
            w_star,
            rank,
            noise_std,
            seed,
        },
    ))
}

fn parse_header(headers: &csv::StringRecord) -> Result<(usize, usize)> {
    let fields: Vec<&str> = headers.iter().collect();
    if fields.first() != Some(&"task_id") {
        return Err(Error::Format {
            line: 1,
            msg: "first column must be `task_id`".into(),
        });
    }
    let rest = &fields[1..];
    let outputs = if rest.first() == Some(&"y") {
        1
    } else {
        let mut c = 0;
        while c < rest.len() && rest[c] == format!("y{}", c + 1) {
            c += 1;
        }
        if c == 0 {
            return Err(Error::Format {
                line: 1,
                msg: "expected a `y` column or `y1..yc` columns after task_id".into(),
            });
        }
        c
    };
    let feature_cols = &rest[outputs..];
    if feature_cols.is_empty() {
        return Err(Error::Format {
            line: 1,
            msg: "no feature columns `f1..fd` found".into(),
        });
    }
    for (i, name) in feature_cols.iter().enumerate() {
        if *name != format!("f{}", i + 1) {
            return Err(Error::Format {
                line: 1,
                msg: format!("expected feature column `f{}`, found `{name}`", i + 1),
            });
        }
    }
    Ok((outputs, feature_cols.len()))
}

/// Parse the task CSV format from any reader.
pub fn read_csv_tasks<R: Read>(reader: R) -> Result<MultiTaskDataset> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| Error::Format {
            line: 1,
            msg: format!("unreadable header: {e}"),
        })?
        .clone();
    let (outputs, features) = parse_header(&headers)?;

    // per task: one (targets, features) tuple per sample, in row order
    type SampleRows = Vec<(Vec<f64>, Vec<f64>)>;
    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, SampleRows> = HashMap::new();
    for record in csv_reader.records() {
        let record = record.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line())
                .unwrap_or(0);
            Error::Format {
                line,
                msg: format!("{e}"),
            }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 1 + outputs + features {
            return Err(Error::Format {
                line,
                msg: format!(
                    "expected {} fields, found {}",
                    1 + outputs + features,
                    record.len()
                ),
            });
        }
        let id = record[0].to_string();
        let parse = |field: &str, what: &str| -> Result<f64> {
            field.parse::<f64>().map_err(|_| Error::Format {
                line,
                msg: format!("non-numeric {what} value `{field}`"),
            })
        };
        let mut y = Vec::with_capacity(outputs);
        for i in 0..outputs {
            y.push(parse(&record[1 + i], "target")?);
        }
        let mut f = Vec::with_capacity(features);
        for i in 0..features {
            f.push(parse(&record[1 + outputs + i], "feature")?);
        }
        if !rows.contains_key(&id) {
            order.push(id.clone());
        }
        rows.entry(id).or_default().push((y, f));
    }

    if order.is_empty() {
        return Err(Error::Format {
            line: 0,
            msg: "file contains no data rows".into(),
        });
    }

    let mut tasks = Vec::with_capacity(order.len());
    for id in order {
        let task_rows = rows.remove(&id).expect("id registered");
        let n = task_rows.len();
        let x = DMatrix::from_fn(features, n, |i, j| task_rows[j].1[i]);
        let y = DMatrix::from_fn(outputs, n, |i, j| task_rows[j].0[i]);
        tasks.push(TaskData::with_id(id, x, y)?);
    }
    MultiTaskDataset::new(tasks)
}

/// Load the task CSV format from a file.
pub fn load_csv_tasks(path: impl AsRef<Path>) -> Result<MultiTaskDataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv_tasks(std::io::BufReader::new(file))
}

/// Write a dataset in the task CSV format understood by [`load_csv_tasks`].
pub fn write_csv_tasks<W: Write>(dataset: &MultiTaskDataset, mut out: W) -> Result<()> {
    let outputs = dataset.task(0).output_dim();
    if dataset.tasks().iter().any(|t| t.output_dim() != outputs) {
        return Err(Error::InvalidInput(
            "CSV export requires a uniform output dimension across tasks".into(),
        ));
    }
    let mut header = String::from("task_id");
    if outputs == 1 {
        header.push_str(",y");
    } else {
        for i in 1..=outputs {
            header.push_str(&format!(",y{i}"));
        }
    }
    for i in 1..=dataset.feature_dim() {
        header.push_str(&format!(",f{i}"));
    }
    writeln!(out, "{header}")?;
    for (t, task) in dataset.tasks().iter().enumerate() {
        let label = dataset.task_label(t);
        for j in 0..task.sample_count() {
            let mut row = label.clone();
            for i in 0..outputs {
                row.push_str(&format!(",{}", task.targets()[(i, j)]));
            }
            for i in 0..dataset.feature_dim() {
                row.push_str(&format!(",{}", task.features()[(i, j)]));
            }
            writeln!(out, "{row}")?;
        }
    }
    Ok(())
}

/// Round-half-up train size, clamped so both sides stay non-empty.
fn train_size(n: usize, fraction: f64) -> usize {
    let raw = (n as f64 * fraction + 0.5).floor() as usize;
    raw.clamp(1, n - 1)
}

fn select_columns(task: &TaskData, indices: &[usize]) -> Result<TaskData> {
    let x = DMatrix::from_fn(task.feature_dim(), indices.len(), |i, j| {
        task.features()[(i, indices[j])]
    });
    let y = DMatrix::from_fn(task.output_dim(), indices.len(), |i, j| {
        task.targets()[(i, indices[j])]
    });
    TaskData::with_id(task.id(), x, y)
}

/// Fisher–Yates shuffle driven by the given stream.
fn shuffled_indices(n: usize, rng: &mut rand_chacha::ChaCha12Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        idx.swap(i, j);
    }
    idx
}

/// Partition every task into train and test samples without replacement.
///
/// Sizes follow round-half-up on n_t·fraction, clamped to [1, n_t − 1];
/// original sample order is preserved within each side.
pub fn split_train_test(
    dataset: &MultiTaskDataset,
    spec: &SplitSpec,
) -> Result<(MultiTaskDataset, MultiTaskDataset)> {
    if !spec.train_fraction.is_finite() || spec.train_fraction <= 0.0 || spec.train_fraction >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "train_fraction = {} must lie strictly between 0 and 1",
            spec.train_fraction
        )));
    }
    for (t, task) in dataset.tasks().iter().enumerate() {
        if task.sample_count() < 2 {
            return Err(Error::InvalidParameter(format!(
                "task {} ({:?}) has {} sample(s); need at least 2 to split",
                t,
                task.id(),
                task.sample_count()
            )));
        }
    }

    let mut train_tasks = Vec::with_capacity(dataset.task_count());
    let mut test_tasks = Vec::with_capacity(dataset.task_count());

    if spec.per_task {
        for (t, task) in dataset.tasks().iter().enumerate() {
            let n = task.sample_count();
            let n_train = train_size(n, spec.train_fraction);
            let mut rng = rng::stream(spec.seed, &format!("split/{t}"));
            let order = shuffled_indices(n, &mut rng);
            let mut train_idx: Vec<usize> = order[..n_train].to_vec();
            let mut test_idx: Vec<usize> = order[n_train..].to_vec();
            train_idx.sort_unstable();
            test_idx.sort_unstable();
            train_tasks.push(select_columns(task, &train_idx)?);
            test_tasks.push(select_columns(task, &test_idx)?);
        }
    } else {
        // pooled shuffle across all samples, same global fraction
        let counts: Vec<usize> = dataset.tasks().iter().map(|t| t.sample_count()).collect();
        let total: usize = counts.iter().sum();
        let n_train = train_size(total, spec.train_fraction);
        let mut rng = rng::stream(spec.seed, "split/pooled");
        let order = shuffled_indices(total, &mut rng);
        let mut is_train = vec![false; total];
        for &i in &order[..n_train] {
            is_train[i] = true;
        }
        let mut base = 0usize;
        for (t, task) in dataset.tasks().iter().enumerate() {
            let n = counts[t];
            let train_idx: Vec<usize> =
                (0..n).filter(|&j| is_train[base + j]).collect();
            let test_idx: Vec<usize> = (0..n).filter(|&j| !is_train[base + j]).collect();
            if train_idx.is_empty() || test_idx.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "pooled split left task {} ({:?}) with an empty side",
                    t,
                    task.id()
                )));
            }
            train_tasks.push(select_columns(task, &train_idx)?);
            test_tasks.push(select_columns(task, &test_idx)?);
            base += n;
        }
    }

    Ok((
        MultiTaskDataset::new(train_tasks)?,
        MultiTaskDataset::new(test_tasks)?,
    ))
}

/// Add Gaussian noise to the targets of ⌈task_fraction·T⌉ seed-selected
/// tasks; unselected tasks are returned bit-identical.
pub fn inject_label_noise(
    dataset: &MultiTaskDataset,
    spec: &NoiseSpec,
) -> Result<MultiTaskDataset> {
    spec.validate()?;
    let t_count = dataset.task_count();
    let n_corrupt = (spec.task_fraction * t_count as f64).ceil() as usize;
    let n_corrupt = n_corrupt.min(t_count);

    let mut selected = vec![false; t_count];
    if n_corrupt > 0 {
        let mut rng = rng::stream(spec.seed, "label-noise/select");
        let order = shuffled_indices(t_count, &mut rng);
        for &t in &order[..n_corrupt] {
            selected[t] = true;
        }
    }

    let std_dev = spec.std_dev();
    let tasks = dataset
        .tasks()
        .iter()
        .enumerate()
        .map(|(t, task)| {
            if !selected[t] {
                return Ok(task.clone());
            }
            let mut rng = rng::stream(spec.seed, &format!("label-noise/{t}"));
            let mut y = task.targets().clone();
            for v in y.iter_mut() {
                let noise: f64 = rng.sample(StandardNormal);
                *v += spec.mean + std_dev * noise;
            }
            task.with_targets(y)
        })
        .collect::<Result<Vec<_>>>()?;
    MultiTaskDataset::new(tasks)
}

/// Number of tasks [`inject_label_noise`] will corrupt for a given fraction.
pub fn corrupted_task_count(task_count: usize, task_fraction: f64) -> usize {
    ((task_fraction * task_count as f64).ceil() as usize).min(task_count)
}

/// Write a plain matrix as CSV with a `c1..cn` header (used for ground-truth
/// exports).
pub fn write_matrix_csv<W: Write>(matrix: &DMatrix<f64>, mut out: W) -> Result<()> {
    let header: Vec<String> = (1..=matrix.ncols()).map(|j| format!("c{j}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for i in 0..matrix.nrows() {
        let row: Vec<String> = (0..matrix.ncols()).map(|j| matrix[(i, j)].to_string()).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Read a matrix written by [`write_matrix_csv`].
pub fn read_matrix_csv<R: Read>(reader: R) -> Result<DMatrix<f64>> {
    let mut csv_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let cols = csv_reader
        .headers()
        .map_err(|e| Error::Format {
            line: 1,
            msg: format!("unreadable header: {e}"),
        })?
        .len();
    let mut values: Vec<f64> = Vec::new();
    let mut rows = 0usize;
    for record in csv_reader.records() {
        let record = record.map_err(|e| Error::Format {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: format!("{e}"),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != cols {
            return Err(Error::Format {
                line,
                msg: format!("expected {cols} fields, found {}", record.len()),
            });
        }
        for field in record.iter() {
            values.push(field.parse::<f64>().map_err(|_| Error::Format {
                line,
                msg: format!("non-numeric value `{field}`"),
            })?);
        }
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

/// Z-score every feature row using statistics pooled over the given
/// dataset; returns the transform so test data can reuse it.
pub fn standardize_features(
    dataset: &MultiTaskDataset,
) -> Result<(MultiTaskDataset, FeatureScaler)> {
    let d = dataset.feature_dim();
    let total: usize = dataset.tasks().iter().map(|t| t.sample_count()).sum();
    let mut mean = DVector::<f64>::zeros(d);
    for task in dataset.tasks() {
        mean += task.features().column_sum();
    }
    mean /= total as f64;
    let mut var = DVector::<f64>::zeros(d);
    for task in dataset.tasks() {
        for col in task.features().column_iter() {
            for i in 0..d {
                let diff = col[i] - mean[i];
                var[i] += diff * diff;
            }
        }
    }
    var /= total as f64;
    let scale = DVector::from_iterator(d, var.iter().map(|&v| {
        let s = v.sqrt();
        if s > 1e-12 {
            1.0 / s
        } else {
            1.0
        }
    }));
    let scaler = FeatureScaler { mean, scale };
    Ok((scaler.apply(dataset)?, scaler))
}

/// Per-feature affine transform x ↦ (x − mean)·scale.
#[derive(Debug, Clone)]
pub struct FeatureScaler {
    pub mean: DVector<f64>,
    pub scale: DVector<f64>,
}

impl FeatureScaler {
    pub fn apply(&self, dataset: &MultiTaskDataset) -> Result<MultiTaskDataset> {
        let tasks = dataset
            .tasks()
            .iter()
            .map(|task| {
                let mut x = task.features().clone();
                for mut col in x.column_iter_mut() {
                    for i in 0..col.len() {
                        col[i] = (col[i] - self.mean[i]) * self.scale[i];
                    }
                }
                task.with_features(x)
            })
            .collect::<Result<Vec<_>>>()?;
        MultiTaskDataset::new(tasks)
    }
}
