//! Spectral primitives for penalties on the tail of a singular spectrum.
//!
//! For a matrix `W` (d×c, m = min(d, c)) with singular values ordered
//! ascending, the two penalties of interest are the squared tail sum
//! `σ₁² + … + σ_k²` and the plain tail sum `σ₁ + … + σ_k`. Suppressing the
//! k smallest singular values encourages rank ≤ m − k without touching the
//! leading spectrum.
//!
//! The module also provides the pieces the alternating solvers need:
//!
//! * the complement projector `F·F'` onto the span of the k
//!   smallest-eigenvalue eigenvectors of `W·W'`, computed as `I − U₃·U₃'`
//!   from the top eigenvectors (cheaper when the kept subspace is small);
//! * the leading left/right singular factor pair `(F, G)` whose coupling
//!   `tr(F'·W·G)` equals the sum of the r largest singular values;
//! * the reweighting matrix `D = ½·(W̃·W̃' + εI)^{−1/2}` that majorizes the
//!   nuclear norm around the current iterate `W̃`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// The full singular spectrum of a matrix, stored ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumView {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl SpectrumView {
    fn new(values: Vec<f64>, rows: usize, cols: usize) -> Self {
        debug_assert_eq!(values.len(), rows.min(cols));
        debug_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        SpectrumView { values, rows, cols }
    }

    /// Singular values ascending; length = min(rows, cols).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Singular values descending (figure convention).
    pub fn descending(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.reverse();
        v
    }

    /// Shape of the decomposed matrix.
    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn min_dim(&self) -> usize {
        self.values.len()
    }

    /// Largest singular value, 0 for an empty spectrum.
    pub fn largest(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Sum of all singular values.
    pub fn nuclear_norm(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Symmetric idempotent d×d matrix `F·F'` projecting onto a k-dimensional
/// eigenspace of `W·W'`.
#[derive(Debug, Clone)]
pub struct Projector {
    matrix: DMatrix<f64>,
    subspace_dim: usize,
}

impl Projector {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Dimension k of the projected subspace; equals the trace of the matrix.
    pub fn subspace_dim(&self) -> usize {
        self.subspace_dim
    }
}

/// Column-orthonormal factors `F` (d×r) and `G` (c×r) for the r leading
/// singular directions of a matrix.
#[derive(Debug, Clone)]
pub struct FactorPair {
    left: DMatrix<f64>,
    right: DMatrix<f64>,
}

impl FactorPair {
    /// Left factor F, d×r.
    pub fn left(&self) -> &DMatrix<f64> {
        &self.left
    }

    /// Right factor G, c×r.
    pub fn right(&self) -> &DMatrix<f64> {
        &self.right
    }

    pub fn rank(&self) -> usize {
        self.left.ncols()
    }

    /// tr(F'·W·G); for factors of `w` itself this is the sum of the r
    /// largest singular values.
    pub fn coupling(&self, w: &DMatrix<f64>) -> f64 {
        if self.rank() == 0 {
            return 0.0;
        }
        (self.left.transpose() * w * &self.right).trace()
    }

    /// F·G', d×c. Zero matrix when r = 0.
    pub fn cross_product(&self) -> DMatrix<f64> {
        &self.left * self.right.transpose()
    }
}

/// Symmetric positive-definite reweighting matrix `½·(W̃·W̃' + εI)^{−1/2}`.
#[derive(Debug, Clone)]
pub struct ReweightMatrix {
    matrix: DMatrix<f64>,
    floor: f64,
}

impl ReweightMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// The ε used to keep the inverse square root defined.
    pub fn floor(&self) -> f64 {
        self.floor
    }
}

/// Number of trailing eigenvalues of `W·W'` spanned when the k smallest
/// singular values of a rows×cols matrix are suppressed.
///
/// `W·W'` carries max(rows − cols, 0) structural zero eigenvalues below the
/// squared singular values, so the eigenspace covering the k smallest
/// singular values has width `k + max(rows − cols, 0)`.
pub fn gram_tail_dim(rows: usize, cols: usize, k: usize) -> usize {
    k + rows.saturating_sub(cols)
}

/// All min(d, c) singular values of `w`, ascending.
pub fn singular_spectrum(w: &DMatrix<f64>) -> Result<SpectrumView> {
    linalg::require_finite(w, "matrix")?;
    let values = linalg::singular_values_ascending(w)?;
    Ok(SpectrumView::new(values, w.nrows(), w.ncols()))
}

fn check_tail_len(w: &DMatrix<f64>, k: usize) -> Result<()> {
    let m = w.nrows().min(w.ncols());
    if k > m {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds min(d, c) = {m}"
        )));
    }
    Ok(())
}

/// Sum of the squares of the k smallest singular values of `w`.
pub fn ksmallest_sq_sum(w: &DMatrix<f64>, k: usize) -> Result<f64> {
    linalg::require_finite(w, "matrix")?;
    check_tail_len(w, k)?;
    let values = linalg::singular_values_ascending(w)?;
    Ok(values[..k].iter().map(|s| s * s).sum())
}

/// Sum of the k smallest singular values of `w`. With k = min(d, c) this is
/// the nuclear norm.
pub fn ksmallest_sum(w: &DMatrix<f64>, k: usize) -> Result<f64> {
    linalg::require_finite(w, "matrix")?;
    check_tail_len(w, k)?;
    let values = linalg::singular_values_ascending(w)?;
    Ok(values[..k].iter().sum())
}

/// Projector `F·F'` onto the span of the k smallest-eigenvalue eigenvectors
/// of `W·W'`, computed as `I − U₃·U₃'` where `U₃` holds the top d − k
/// eigenvectors.
///
/// `k` counts eigendirections of the d×d Gram matrix; to suppress the k
/// smallest *singular values* of a rows > cols matrix, pass
/// [`gram_tail_dim`]`(rows, cols, k)`. Under eigenvalue ties at the cut any
/// eigenbasis is acceptable: the product `tr(P·W·W')` is what the solvers
/// consume, not a particular `F`.
pub fn projector_complement(w: &DMatrix<f64>, k: usize) -> Result<Projector> {
    linalg::require_finite(w, "matrix")?;
    let d = w.nrows();
    if k > d {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds d = {d}")));
    }
    let gram = linalg::gram(w);
    let (_, vectors) = linalg::sym_eig_ascending(gram)?;
    // top (d − k) eigenvectors are the trailing columns in ascending order
    let kept = d - k;
    let u3 = vectors.columns(k, kept);
    let mut p = DMatrix::<f64>::identity(d, d);
    p -= u3 * u3.transpose();
    Ok(Projector {
        matrix: linalg::symmetrize(&p),
        subspace_dim: k,
    })
}

/// Left/right singular vectors of the r largest singular values of `w`.
pub fn top_singular_factors(w: &DMatrix<f64>, r: usize) -> Result<FactorPair> {
    linalg::require_finite(w, "matrix")?;
    let m = w.nrows().min(w.ncols());
    if r > m {
        return Err(Error::InvalidParameter(format!(
            "r = {r} exceeds min(d, c) = {m}"
        )));
    }
    let (u, _, v) = linalg::svd_descending(w)?;
    Ok(FactorPair {
        left: u.columns(0, r).into_owned(),
        right: v.columns(0, r).into_owned(),
    })
}

/// `D = ½·(W̃·W̃' + εI)^{−1/2}` via symmetric eigendecomposition.
///
/// The ε term keeps the inverse square root defined when `W̃·W̃'` is
/// singular, which tail suppression actively drives toward.
pub fn reweight_matrix(wtilde: &DMatrix<f64>, eps: f64) -> Result<ReweightMatrix> {
    linalg::require_finite(wtilde, "matrix")?;
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "reweight floor eps = {eps} must be positive"
        )));
    }
    let d = wtilde.nrows();
    let mut shifted = linalg::gram(wtilde);
    for i in 0..d {
        shifted[(i, i)] += eps;
    }
    let (values, vectors) = linalg::sym_eig_ascending(shifted)?;
    // exact eigenvalues are ≥ ε; the guard only catches round-off undershoot
    // far below ε and never perturbs a correctly computed eigenvalue
    let guard = eps * 1e-3;
    let inv_roots = DVector::from_iterator(d, values.iter().map(|&l| 0.5 / l.max(guard).sqrt()));
    let dmat = &vectors * DMatrix::from_diagonal(&inv_roots) * vectors.transpose();
    Ok(ReweightMatrix {
        matrix: linalg::symmetrize(&dmat),
        floor: eps,
    })
}
