//! Dense linear-algebra helpers shared by the spectral and solver modules.
//!
//! Everything here is a thin wrapper over nalgebra's dense routines that
//! pins down the conventions the rest of the crate relies on: symmetric
//! eigendecompositions sorted ascending, thin SVDs sorted descending.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

pub(crate) fn require_finite(m: &DMatrix<f64>, context: &str) -> Result<()> {
    if all_finite(m) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{context} contains non-finite entries")))
    }
}

/// Symmetric part (A + A')/2. Products like W·W' accumulate round-off
/// asymmetry that the symmetric eigensolver must not see.
pub(crate) fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut s = a.clone();
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

/// Gram matrix W·W' of `w`, symmetrized.
pub(crate) fn gram(w: &DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(&(w * w.transpose()))
}

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending and the
/// eigenvector columns permuted to match.
pub(crate) fn sym_eig_ascending(a: DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let eig = nalgebra::SymmetricEigen::try_new(a, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("symmetric eigendecomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_columns(
        &order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>(),
    );
    Ok((values, vectors))
}

/// Thin SVD with singular values sorted descending.
///
/// Returns `(u, sigma, v)` with `u`: rows×m, `v`: cols×m, m = min(rows, cols),
/// such that `w = u * diag(sigma) * v'`.
pub(crate) fn svd_descending(w: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let m = w.nrows().min(w.ncols());
    if m == 0 {
        return Ok((
            DMatrix::zeros(w.nrows(), 0),
            DVector::zeros(0),
            DMatrix::zeros(w.ncols(), 0),
        ));
    }
    let svd = nalgebra::SVD::try_new(w.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("singular value decomposition did not converge".into()))?;
    let u = svd.u.expect("svd computed with u");
    let v_t = svd.v_t.expect("svd computed with v");
    let sigma = svd.singular_values;

    // nalgebra sorts descending already; re-sorting costs nothing and removes
    // the dependency on that behaviour.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let sorted_sigma = DVector::from_iterator(m, order.iter().map(|&i| sigma[i]));
    let sorted_u =
        DMatrix::from_columns(&order.iter().map(|&i| u.column(i)).collect::<Vec<_>>());
    let v = v_t.transpose();
    let sorted_v =
        DMatrix::from_columns(&order.iter().map(|&i| v.column(i)).collect::<Vec<_>>());
    Ok((sorted_u, sorted_sigma, sorted_v))
}

/// All min(rows, cols) singular values of `w`, ascending.
pub(crate) fn singular_values_ascending(w: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (_, sigma, _) = svd_descending(w)?;
    let mut values: Vec<f64> = sigma.iter().copied().map(|s| s.max(0.0)).collect();
    values.reverse();
    Ok(values)
}
