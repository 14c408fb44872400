//! Multi-task solvers built on closed-form per-task updates.
//!
//! Both alternating solvers share the same skeleton: a spectral step on the
//! stacked matrix `W = [W₁, …, W_T]` (d×c) followed by independent per-task
//! ridge-style solves. For the squared-tail penalty the spectral step is the
//! complement projector `P = F·F'` and each task solves
//!
//! ```text
//! (Xc·Xc' + γ·P)·W_t = Xc·Yc'
//! ```
//!
//! For the plain-tail penalty the spectral step produces the leading factor
//! pair `(F, G)` and the reweighting matrix `D`, and each task solves
//!
//! ```text
//! (Xc·Xc' + γ·D)·W_t = Xc·Yc' + ½·γ·F·G_t'
//! ```
//!
//! with `G_t` the row block of `G` for task t. Updates run on mean-centered
//! data; substituting the optimal bias `b_t = ȳ − W_t'·x̄` into the loss is
//! algebraically identical to centering, so each task solve is the exact
//! joint (W_t, b_t) minimizer of its subproblem. That exactness is what
//! makes the recorded objective traces monotone.

use std::time::Instant;

use nalgebra::{DMatrix, DMatrixView, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng;
use crate::spectral::{self, SpectrumView};

/// One task's design: features X (d×n, samples in columns) and targets
/// Y (c_t×n).
#[derive(Debug, Clone)]
pub struct TaskData {
    id: String,
    x: DMatrix<f64>,
    y: DMatrix<f64>,
}

impl TaskData {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        Self::with_id(String::new(), x, y)
    }

    pub fn with_id(id: impl Into<String>, x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        let id = id.into();
        linalg::require_finite(&x, "features")?;
        linalg::require_finite(&y, "targets")?;
        if x.ncols() != y.ncols() {
            return Err(Error::InvalidInput(format!(
                "task {id:?}: feature columns ({}) and target columns ({}) disagree",
                x.ncols(),
                y.ncols()
            )));
        }
        if x.ncols() == 0 {
            return Err(Error::InvalidInput(format!("task {id:?} has no samples")));
        }
        if y.nrows() == 0 {
            return Err(Error::InvalidInput(format!("task {id:?} has no outputs")));
        }
        Ok(TaskData { id, x, y })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn targets(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn feature_dim(&self) -> usize {
        self.x.nrows()
    }

    pub fn sample_count(&self) -> usize {
        self.x.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.y.nrows()
    }

    /// Same task with replaced targets; shapes must agree.
    pub fn with_targets(&self, y: DMatrix<f64>) -> Result<Self> {
        Self::with_id(self.id.clone(), self.x.clone(), y)
    }

    /// Same task with replaced features; shapes must agree.
    pub fn with_features(&self, x: DMatrix<f64>) -> Result<Self> {
        Self::with_id(self.id.clone(), x, self.y.clone())
    }
}

/// Ordered collection of tasks sharing the feature dimension d. The stacked
/// weight matrix lays task blocks out in this order, column-wise.
#[derive(Debug, Clone)]
pub struct MultiTaskDataset {
    tasks: Vec<TaskData>,
    feature_dim: usize,
    offsets: Vec<usize>,
    total_outputs: usize,
}

impl MultiTaskDataset {
    pub fn new(tasks: Vec<TaskData>) -> Result<Self> {
        let first = tasks
            .first()
            .ok_or_else(|| Error::InvalidInput("dataset has no tasks".into()))?;
        let feature_dim = first.feature_dim();
        let mut offsets = Vec::with_capacity(tasks.len());
        let mut total = 0usize;
        for (t, task) in tasks.iter().enumerate() {
            if task.feature_dim() != feature_dim {
                return Err(Error::InvalidInput(format!(
                    "task {} ({:?}) has feature dim {}, expected {}",
                    t,
                    task.id(),
                    task.feature_dim(),
                    feature_dim
                )));
            }
            offsets.push(total);
            total += task.output_dim();
        }
        Ok(MultiTaskDataset {
            tasks,
            feature_dim,
            offsets,
            total_outputs: total,
        })
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// Total output dimension c = Σ_t c_t; the stacked W is d×c.
    pub fn total_outputs(&self) -> usize {
        self.total_outputs
    }

    /// min(d, c): the number of singular values of the stacked W.
    pub fn min_dim(&self) -> usize {
        self.feature_dim.min(self.total_outputs)
    }

    pub fn tasks(&self) -> &[TaskData] {
        &self.tasks
    }

    pub fn task(&self, t: usize) -> &TaskData {
        &self.tasks[t]
    }

    /// First column of task t's block in the stacked W.
    pub fn column_offset(&self, t: usize) -> usize {
        self.offsets[t]
    }

    /// Display id of task t: the stored id, or the index when blank.
    pub fn task_label(&self, t: usize) -> String {
        let id = self.tasks[t].id();
        if id.is_empty() {
            t.to_string()
        } else {
            id.to_string()
        }
    }
}

/// Stacked weight matrix with per-task column blocks and bias vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    weights: DMatrix<f64>,
    biases: Vec<DVector<f64>>,
    offsets: Vec<usize>,
}

impl ModelParams {
    pub fn from_blocks(blocks: Vec<DMatrix<f64>>, biases: Vec<DVector<f64>>) -> Result<Self> {
        if blocks.is_empty() || blocks.len() != biases.len() {
            return Err(Error::InvalidInput(
                "weight blocks and biases must be non-empty and aligned".into(),
            ));
        }
        let d = blocks[0].nrows();
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut total = 0usize;
        for (t, (block, bias)) in blocks.iter().zip(biases.iter()).enumerate() {
            linalg::require_finite(block, "weights")?;
            if !bias.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidInput(format!("task {t} bias is non-finite")));
            }
            if block.nrows() != d || block.ncols() != bias.len() {
                return Err(Error::InvalidInput(format!(
                    "task {t} block is {}×{} with bias length {}",
                    block.nrows(),
                    block.ncols(),
                    bias.len()
                )));
            }
            offsets.push(total);
            total += block.ncols();
        }
        let mut weights = DMatrix::zeros(d, total);
        for (block, &offset) in blocks.iter().zip(offsets.iter()) {
            weights
                .view_mut((0, offset), (d, block.ncols()))
                .copy_from(block);
        }
        Ok(ModelParams {
            weights,
            biases,
            offsets,
        })
    }

    /// Rebuild from a stacked matrix and per-task biases (block widths taken
    /// from the bias lengths).
    pub fn from_stacked(weights: DMatrix<f64>, biases: Vec<DVector<f64>>) -> Result<Self> {
        linalg::require_finite(&weights, "weights")?;
        let mut offsets = Vec::with_capacity(biases.len());
        let mut total = 0usize;
        for bias in &biases {
            if !bias.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidInput("bias is non-finite".into()));
            }
            offsets.push(total);
            total += bias.len();
        }
        if total != weights.ncols() {
            return Err(Error::InvalidInput(format!(
                "bias widths sum to {total} but the stacked matrix has {} columns",
                weights.ncols()
            )));
        }
        Ok(ModelParams {
            weights,
            biases,
            offsets,
        })
    }

    /// The stacked d×c weight matrix.
    pub fn stacked(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn task_count(&self) -> usize {
        self.biases.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn block_width(&self, t: usize) -> usize {
        self.biases[t].len()
    }

    /// View of task t's d×c_t weight block.
    pub fn task_weights(&self, t: usize) -> DMatrixView<'_, f64> {
        self.weights
            .view((0, self.offsets[t]), (self.weights.nrows(), self.biases[t].len()))
    }

    pub fn bias(&self, t: usize) -> &DVector<f64> {
        &self.biases[t]
    }

    fn conforms(&self, dataset: &MultiTaskDataset) -> Result<()> {
        if self.feature_dim() != dataset.feature_dim()
            || self.task_count() != dataset.task_count()
            || (0..self.task_count()).any(|t| self.block_width(t) != dataset.task(t).output_dim())
        {
            return Err(Error::InvalidInput(
                "model parameters do not match the dataset layout".into(),
            ));
        }
        Ok(())
    }
}

/// How the stacked weights are initialized before iterating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    /// W = 0; biases start at the task target means.
    Zeros,
    /// Per-task ridge fit. `lambda0 = None` scales automatically to
    /// 1e-3·tr(X·X')/d over the whole dataset.
    Ridge { lambda0: Option<f64> },
    /// Seeded standard-normal entries scaled by 1/√d.
    Random,
}

impl Default for InitMode {
    fn default() -> Self {
        InitMode::Ridge { lambda0: None }
    }
}

/// Solver knobs shared by both alternating methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Penalty weight γ ≥ 0.
    pub gamma: f64,
    /// Number of smallest singular values to suppress, 0 ≤ k ≤ min(d, c).
    pub k: usize,
    /// Outer iteration cap.
    pub max_iter: usize,
    /// Relative objective-change stopping threshold.
    pub tol: f64,
    /// Base reweight floor; the effective floor scales with the iterate as
    /// eps·(1 + ‖W̃‖_F²/d).
    pub eps: f64,
    pub init: InitMode,
    pub seed: u64,
    /// Add the diagonal floor 1e-10·tr(A)/d before each per-task solve.
    /// Keeps systems invertible when n_t < d; switchable for ablation.
    pub stabilize: bool,
}

impl SolverConfig {
    pub fn new(gamma: f64, k: usize) -> Self {
        SolverConfig {
            gamma,
            k,
            max_iter: 100,
            tol: 1e-7,
            eps: 1e-8,
            init: InitMode::default(),
            seed: 0,
            stabilize: true,
        }
    }

    /// Defaults for the squared-tail solver (γ = 10²).
    pub fn kmsv_defaults(k: usize) -> Self {
        Self::new(1e2, k)
    }

    /// Defaults for the plain-tail solver (γ = 10⁴).
    pub fn kmsv_new_defaults(k: usize) -> Self {
        Self::new(1e4, k)
    }

    pub fn validate(&self, dataset: &MultiTaskDataset) -> Result<()> {
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gamma = {} must be finite and non-negative",
                self.gamma
            )));
        }
        let m = dataset.min_dim();
        if self.k > m {
            return Err(Error::InvalidParameter(format!(
                "k = {} exceeds min(d, c) = {m}",
                self.k
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tol = {} must be positive",
                self.tol
            )));
        }
        if !self.eps.is_finite() || self.eps <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "eps = {} must be positive",
                self.eps
            )));
        }
        Ok(())
    }
}

/// Per-iteration objective trace and convergence summary of one fit.
#[derive(Debug, Clone)]
pub struct FitReport {
    /// Objective value after each outer iteration; length = `iterations`.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Singular spectrum of the final stacked W.
    pub final_spectrum: SpectrumView,
    /// Wall-clock seconds spent in the fit.
    pub wall_time: f64,
    /// Objective at the initial iterate, before the first update.
    pub initial_objective: f64,
    /// For the plain-tail solver: loss + γ·(‖W‖_* − tr(F'·W·G)) at each
    /// iteration's factor pair, recorded next to the main objective.
    pub surrogate_trace: Option<Vec<f64>>,
}

/// Mean-centered copy of one task.
#[derive(Debug, Clone)]
pub struct CenteredTask {
    /// X − x̄·1', d×n.
    pub xc: DMatrix<f64>,
    /// Y − ȳ·1', c_t×n.
    pub yc: DMatrix<f64>,
    /// Column mean of X, length d.
    pub x_mean: DVector<f64>,
    /// Column mean of Y, length c_t.
    pub y_mean: DVector<f64>,
}

/// Subtract the per-row sample means from features and targets.
pub fn center_task(task: &TaskData) -> CenteredTask {
    let n = task.sample_count() as f64;
    let x_mean = task.features().column_sum() / n;
    let y_mean = task.targets().column_sum() / n;
    let mut xc = task.features().clone();
    for mut col in xc.column_iter_mut() {
        col -= &x_mean;
    }
    let mut yc = task.targets().clone();
    for mut col in yc.column_iter_mut() {
        col -= &y_mean;
    }
    CenteredTask {
        xc,
        yc,
        x_mean,
        y_mean,
    }
}

/// Centered products every iteration reuses: Xc·Xc' and Xc·Yc'.
struct PreparedTask {
    gram: DMatrix<f64>,
    cross: DMatrix<f64>,
    x_mean: DVector<f64>,
    y_mean: DVector<f64>,
}

fn prepare(dataset: &MultiTaskDataset) -> Vec<PreparedTask> {
    dataset
        .tasks()
        .iter()
        .map(|task| {
            let centered = center_task(task);
            PreparedTask {
                gram: linalg::symmetrize(&(&centered.xc * centered.xc.transpose())),
                cross: &centered.xc * centered.yc.transpose(),
                x_mean: centered.x_mean,
                y_mean: centered.y_mean,
            }
        })
        .collect()
}

/// Solve (gram + penalty_scaled [+ δI])·W = cross + extra, recover the bias.
fn solve_block(
    prep: &PreparedTask,
    penalty_scaled: &DMatrix<f64>,
    rhs_extra: Option<DMatrixView<'_, f64>>,
    stabilize: bool,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let d = prep.gram.nrows();
    let mut a = &prep.gram + penalty_scaled;
    if stabilize {
        let delta = 1e-10 * a.trace() / d as f64;
        for i in 0..d {
            a[(i, i)] += delta;
        }
    }
    let rhs = match rhs_extra {
        Some(extra) => &prep.cross + extra,
        None => prep.cross.clone(),
    };
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Numerical("per-task system is singular after the floor".into()))?;
    let weights = chol.solve(&rhs);
    let bias = &prep.y_mean - weights.transpose() * &prep.x_mean;
    Ok((weights, bias))
}

/// Closed-form joint (W_t, b_t) minimizer of the per-task subproblem
/// ‖W_t'·X + b_t·1' − Y‖_F² + γ·tr(W_t'·M·W_t) − 2·tr(W_t'·C):
/// (Xc·Xc' + γ·M)·W_t = Xc·Yc' + C on centered data, b_t = ȳ − W_t'·x̄.
pub fn update_task_weights(
    task: &TaskData,
    penalty: &DMatrix<f64>,
    gamma: f64,
    linear: Option<&DMatrix<f64>>,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let d = task.feature_dim();
    if penalty.nrows() != d || penalty.ncols() != d {
        return Err(Error::InvalidInput(format!(
            "penalty matrix is {}×{}, expected {d}×{d}",
            penalty.nrows(),
            penalty.ncols()
        )));
    }
    linalg::require_finite(penalty, "penalty matrix")?;
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "gamma = {gamma} must be finite and non-negative"
        )));
    }
    if let Some(c) = linear {
        if c.nrows() != d || c.ncols() != task.output_dim() {
            return Err(Error::InvalidInput(format!(
                "linear term is {}×{}, expected {d}×{}",
                c.nrows(),
                c.ncols(),
                task.output_dim()
            )));
        }
        linalg::require_finite(c, "linear term")?;
    }
    let centered = center_task(task);
    let prep = PreparedTask {
        gram: linalg::symmetrize(&(&centered.xc * centered.xc.transpose())),
        cross: &centered.xc * centered.yc.transpose(),
        x_mean: centered.x_mean,
        y_mean: centered.y_mean,
    };
    solve_block(
        &prep,
        &(penalty * gamma),
        linear.map(|c| c.view((0, 0), (d, c.ncols()))),
        true,
    )
}

/// Σ_t ‖W_t'·X_t + b_t·1' − Y_t‖_F².
fn squared_loss(dataset: &MultiTaskDataset, params: &ModelParams) -> f64 {
    let mut total = 0.0;
    for (t, task) in dataset.tasks().iter().enumerate() {
        let mut pred = params.task_weights(t).transpose() * task.features();
        for mut col in pred.column_iter_mut() {
            col += params.bias(t);
        }
        total += (pred - task.targets()).norm_squared();
    }
    total
}

/// Loss plus γ times the squared tail sum of the stacked spectrum.
pub fn objective_kmsv(
    dataset: &MultiTaskDataset,
    params: &ModelParams,
    gamma: f64,
    k: usize,
) -> Result<f64> {
    params.conforms(dataset)?;
    Ok(squared_loss(dataset, params) + gamma * spectral::ksmallest_sq_sum(params.stacked(), k)?)
}

/// Loss plus γ times the plain tail sum of the stacked spectrum.
pub fn objective_kmsv_new(
    dataset: &MultiTaskDataset,
    params: &ModelParams,
    gamma: f64,
    k: usize,
) -> Result<f64> {
    params.conforms(dataset)?;
    Ok(squared_loss(dataset, params) + gamma * spectral::ksmallest_sum(params.stacked(), k)?)
}

fn relative_change(current: f64, previous: f64) -> f64 {
    (current - previous).abs() / (1.0 + previous.abs())
}

fn solver_err(iteration: usize, err: Error) -> Error {
    match err {
        Error::Numerical(msg) => Error::Solver { iteration, msg },
        other => other,
    }
}

fn assemble(
    dataset: &MultiTaskDataset,
    blocks: Vec<(DMatrix<f64>, DVector<f64>)>,
) -> Result<ModelParams> {
    let (weights, biases): (Vec<_>, Vec<_>) = blocks.into_iter().unzip();
    let params = ModelParams::from_blocks(weights, biases)?;
    params.conforms(dataset)?;
    Ok(params)
}

fn initial_params(
    dataset: &MultiTaskDataset,
    prepared: &[PreparedTask],
    config: &SolverConfig,
) -> Result<ModelParams> {
    let d = dataset.feature_dim();
    match &config.init {
        InitMode::Zeros => {
            let blocks = dataset
                .tasks()
                .iter()
                .zip(prepared)
                .map(|(task, prep)| (DMatrix::zeros(d, task.output_dim()), prep.y_mean.clone()))
                .collect();
            assemble(dataset, blocks)
        }
        InitMode::Ridge { lambda0 } => {
            let lambda = lambda0.unwrap_or_else(|| {
                let energy: f64 = dataset
                    .tasks()
                    .iter()
                    .map(|t| t.features().norm_squared())
                    .sum();
                1e-3 * energy / d as f64
            });
            if !lambda.is_finite() || lambda <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "ridge initialization needs a positive lambda, got {lambda}"
                )));
            }
            let eye = DMatrix::<f64>::identity(d, d) * lambda;
            let blocks = prepared
                .iter()
                .map(|prep| solve_block(prep, &eye, None, config.stabilize))
                .collect::<Result<Vec<_>>>()?;
            assemble(dataset, blocks)
        }
        InitMode::Random => {
            let mut rng = rng::stream(config.seed, "solver-init");
            let scale = 1.0 / (d as f64).sqrt();
            let blocks = dataset
                .tasks()
                .iter()
                .zip(prepared)
                .map(|(task, prep)| {
                    let block = DMatrix::from_fn(d, task.output_dim(), |_, _| {
                        let v: f64 = rand::Rng::sample(&mut rng, rand_distr::StandardNormal);
                        v * scale
                    });
                    let bias = &prep.y_mean - block.transpose() * &prep.x_mean;
                    (block, bias)
                })
                .collect();
            assemble(dataset, blocks)
        }
    }
}

/// Alternating solver for the squared-tail objective.
///
/// Each outer iteration recomputes the complement projector of the current
/// stacked W (over the eigenspace covering the k smallest singular values,
/// structural null space included) and then solves every task in closed form
/// against it. Both steps are exact minimizers of the joint relaxation, so
/// the objective trace is nonincreasing.
pub fn solve_kmsv(
    dataset: &MultiTaskDataset,
    config: &SolverConfig,
) -> Result<(ModelParams, FitReport)> {
    config.validate(dataset)?;
    let start = Instant::now();
    let d = dataset.feature_dim();
    let tail = spectral::gram_tail_dim(d, dataset.total_outputs(), config.k);
    let prepared = prepare(dataset);
    let mut params = initial_params(dataset, &prepared, config)?;
    let initial_objective = objective_kmsv(dataset, &params, config.gamma, config.k)?;
    let mut previous = initial_objective;
    let mut trace = Vec::new();
    let mut converged = false;

    for iteration in 1..=config.max_iter {
        let projector = spectral::projector_complement(params.stacked(), tail)
            .map_err(|e| solver_err(iteration, e))?;
        let penalty_scaled = projector.matrix() * config.gamma;
        let blocks = prepared
            .par_iter()
            .map(|prep| solve_block(prep, &penalty_scaled, None, config.stabilize))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| solver_err(iteration, e))?;
        params = assemble(dataset, blocks)?;
        let objective = objective_kmsv(dataset, &params, config.gamma, config.k)?;
        trace.push(objective);
        if relative_change(objective, previous) < config.tol {
            converged = true;
            break;
        }
        previous = objective;
    }

    let report = FitReport {
        iterations: trace.len(),
        converged,
        final_spectrum: spectral::singular_spectrum(params.stacked())?,
        wall_time: start.elapsed().as_secs_f64(),
        initial_objective,
        objective_trace: trace,
        surrogate_trace: None,
    };
    Ok((params, report))
}

/// Alternating reweighted solver for the plain-tail objective.
///
/// Each outer iteration refreshes the leading factor pair (F, G) of the
/// current W, rebuilds the reweighting matrix D at the current iterate, and
/// performs exactly one round of per-task closed-form updates — no nested
/// inner loop.
pub fn solve_kmsv_new(
    dataset: &MultiTaskDataset,
    config: &SolverConfig,
) -> Result<(ModelParams, FitReport)> {
    config.validate(dataset)?;
    let start = Instant::now();
    let d = dataset.feature_dim();
    let kept = dataset.min_dim() - config.k;
    let prepared = prepare(dataset);
    let mut params = initial_params(dataset, &prepared, config)?;
    let initial_objective = objective_kmsv_new(dataset, &params, config.gamma, config.k)?;
    let mut previous = initial_objective;
    let mut trace = Vec::new();
    let mut surrogate = Vec::new();
    let mut converged = false;

    for iteration in 1..=config.max_iter {
        let factors = spectral::top_singular_factors(params.stacked(), kept)
            .map_err(|e| solver_err(iteration, e))?;
        let eps_eff = config.eps * (1.0 + params.stacked().norm_squared() / d as f64);
        let reweight = spectral::reweight_matrix(params.stacked(), eps_eff)
            .map_err(|e| solver_err(iteration, e))?;
        let penalty_scaled = reweight.matrix() * config.gamma;
        let pull = factors.cross_product() * (0.5 * config.gamma);
        let blocks = prepared
            .par_iter()
            .enumerate()
            .map(|(t, prep)| {
                let offset = dataset.column_offset(t);
                let width = dataset.task(t).output_dim();
                solve_block(
                    prep,
                    &penalty_scaled,
                    Some(pull.view((0, offset), (d, width))),
                    config.stabilize,
                )
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| solver_err(iteration, e))?;
        params = assemble(dataset, blocks)?;
        let objective = objective_kmsv_new(dataset, &params, config.gamma, config.k)?;
        let nuclear = spectral::singular_spectrum(params.stacked())?.nuclear_norm();
        surrogate.push(
            squared_loss(dataset, &params)
                + config.gamma * (nuclear - factors.coupling(params.stacked())),
        );
        trace.push(objective);
        if relative_change(objective, previous) < config.tol {
            converged = true;
            break;
        }
        previous = objective;
    }

    let report = FitReport {
        iterations: trace.len(),
        converged,
        final_spectrum: spectral::singular_spectrum(params.stacked())?,
        wall_time: start.elapsed().as_secs_f64(),
        initial_objective,
        objective_trace: trace,
        surrogate_trace: Some(surrogate),
    };
    Ok((params, report))
}

/// Independent per-task ridge regression:
/// W_t = (Xc·Xc' + λI)^{-1}·Xc·Yc', b_t = ȳ − W_t'·x̄.
pub fn solve_ridge(dataset: &MultiTaskDataset, lambda: f64) -> Result<(ModelParams, FitReport)> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "lambda = {lambda} must be positive"
        )));
    }
    let start = Instant::now();
    let d = dataset.feature_dim();
    let prepared = prepare(dataset);
    let eye = DMatrix::<f64>::identity(d, d) * lambda;
    let blocks = prepared
        .par_iter()
        .map(|prep| solve_block(prep, &eye, None, true))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| solver_err(1, e))?;
    let params = assemble(dataset, blocks)?;
    let objective = squared_loss(dataset, &params) + lambda * params.stacked().norm_squared();
    let report = FitReport {
        objective_trace: vec![objective],
        iterations: 1,
        converged: true,
        final_spectrum: spectral::singular_spectrum(params.stacked())?,
        wall_time: start.elapsed().as_secs_f64(),
        initial_objective: objective,
        surrogate_trace: None,
    };
    Ok((params, report))
}

/// Trace-norm regularized fit: the plain-tail solver with the full tail
/// k = min(d, c), where the penalty is exactly the nuclear norm.
pub fn solve_trace(dataset: &MultiTaskDataset, gamma: f64) -> Result<(ModelParams, FitReport)> {
    let mut config = SolverConfig::kmsv_new_defaults(dataset.min_dim());
    config.gamma = gamma;
    solve_kmsv_new(dataset, &config)
}
