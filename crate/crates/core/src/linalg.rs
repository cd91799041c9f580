//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{shape, Error, Result};
use crate::math;

/// Relative eigenvalue floor below which a symmetric matrix is treated as PSD-deficient.
const PSD_TOL: f64 = 1e-10;

/// Column-major unfolding `vec(M)`.
pub fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`].
pub fn unvec(v: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(rows, cols, v.as_slice())
}

pub fn check_square_symmetric(m: &DMatrix<f64>, context: &'static str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::dim(context, "square matrix", shape(m.nrows(), m.ncols())));
    }
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::Inconsistent {
                    field: context,
                    index: i * m.ncols() + j,
                    reason: alloc::format!("matrix not symmetric at ({i}, {j})"),
                });
            }
        }
    }
    Ok(())
}

/// Symmetric square root of a positive semidefinite matrix via its eigendecomposition.
///
/// Eigenvalues slightly below zero (relative `1e-10`) are clipped to zero; anything
/// more negative is rejected.
pub fn sym_sqrt(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square_symmetric(sigma, "covariance")?;
    let eig = sigma.clone().symmetric_eigen();
    let top = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let mut roots = eig.eigenvalues.clone();
    for (i, ev) in eig.eigenvalues.iter().enumerate() {
        if *ev < -PSD_TOL * top {
            return Err(Error::Inconsistent {
                field: "covariance",
                index: i,
                reason: alloc::format!("negative eigenvalue {ev}; matrix is not PSD"),
            });
        }
        roots[i] = math::sqrt(ev.max(0.0));
    }
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&roots) * q.transpose())
}

/// Full deterministic SVD with both factors.
pub fn svd(m: &DMatrix<f64>) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let out = SVD::try_new(m.clone(), true, true, f64::EPSILON, 0)
        .ok_or(Error::Decomposition("SVD did not converge"))?;
    if out.u.is_none() || out.v_t.is_none() {
        return Err(Error::Decomposition("SVD factors missing"));
    }
    Ok(out)
}

pub fn singular_values(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    if m.is_empty() {
        return Ok(DVector::zeros(0));
    }
    let out = SVD::try_new(m.clone(), false, false, f64::EPSILON, 0)
        .ok_or(Error::Decomposition("SVD did not converge"))?;
    Ok(out.singular_values)
}

/// Sum of singular values.
pub fn nuclear_norm(m: &DMatrix<f64>) -> Result<f64> {
    Ok(singular_values(m)?.sum())
}

/// Largest singular value of `a` by `iters` power iterations on `a^T a`.
///
/// Starts from the all-ones vector so the estimate is deterministic. The result
/// never exceeds the true operator norm.
pub fn op_norm_estimate(a: &DMatrix<f64>, iters: usize) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let mut v = DVector::from_element(a.ncols(), 1.0 / math::sqrt(a.ncols() as f64));
    let mut est = 0.0;
    for _ in 0..iters.max(1) {
        let w = a.tr_mul(&(a * &v));
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        est = (a * &v).norm();
    }
    est
}

/// Elementwise maximum absolute value.
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        0.0
    } else {
        m.amax()
    }
}

/// Frobenius inner product.
pub fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}
