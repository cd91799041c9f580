use nalgebra::{DMatrix, DVector};

use crate::error::{shape, Error, Result};
use crate::linalg;
use crate::math;

/// Relative singular-value cutoff used when counting the rank of an estimate.
const RANK_TOL: f64 = 1e-8;

/// `alpha_sp(M) = d_mc ||M||_inf / ||M||_F`.
pub fn spikiness(m: &DMatrix<f64>) -> Result<f64> {
    let f = m.norm();
    if !(f > 0.0) {
        return Err(Error::param("M", "spikiness is undefined for the zero matrix"));
    }
    let d_mc = math::sqrt((m.nrows() * m.ncols()) as f64);
    Ok(d_mc * linalg::inf_norm(m) / f)
}

/// An estimate or truth, either a coefficient vector or a coefficient matrix.
#[derive(Debug, Clone, Copy)]
pub enum Coefficients<'a> {
    Vector(&'a DVector<f64>),
    Matrix(&'a DMatrix<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupportStats {
    pub true_size: usize,
    pub estimated_size: usize,
    pub true_positives: usize,
    pub false_positives: usize,
}

impl SupportStats {
    pub fn exact_recovery(&self) -> bool {
        self.true_positives == self.true_size && self.false_positives == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankStats {
    pub true_rank: usize,
    pub estimated_rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMetrics {
    /// Euclidean (vector) or Frobenius (matrix) error.
    pub l2: f64,
    /// `||Sigma^(1/2) vec(error)||_2` when a covariance is supplied.
    pub weighted: Option<f64>,
    /// `l2 / ||truth||`; NaN when the truth is zero.
    pub relative: f64,
    pub support: Option<SupportStats>,
    pub rank: Option<RankStats>,
}

fn rank(m: &DMatrix<f64>) -> Result<usize> {
    let sv = linalg::singular_values(m)?;
    let top = sv.amax();
    if top == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > RANK_TOL * top.max(1.0)).count())
}

/// Estimation error of `estimate` against `truth`, optionally weighted by `Sigma`
/// acting on `vec` of the error.
pub fn error_metrics(estimate: Coefficients<'_>, truth: Coefficients<'_>, sigma: Option<&DMatrix<f64>>) -> Result<ErrorMetrics> {
    let (diff, truth_norm, support, rank_stats) = match (estimate, truth) {
        (Coefficients::Vector(e), Coefficients::Vector(t)) => {
            if e.len() != t.len() {
                return Err(Error::dim("estimate", t.len(), e.len()));
            }
            let mut stats = SupportStats {
                true_size: 0,
                estimated_size: 0,
                true_positives: 0,
                false_positives: 0,
            };
            for (ei, ti) in e.iter().zip(t.iter()) {
                let (on_e, on_t) = (*ei != 0.0, *ti != 0.0);
                stats.true_size += on_t as usize;
                stats.estimated_size += on_e as usize;
                stats.true_positives += (on_e && on_t) as usize;
                stats.false_positives += (on_e && !on_t) as usize;
            }
            (e - t, t.norm(), Some(stats), None)
        }
        (Coefficients::Matrix(e), Coefficients::Matrix(t)) => {
            if e.shape() != t.shape() {
                return Err(Error::dim("estimate", shape(t.nrows(), t.ncols()), shape(e.nrows(), e.ncols())));
            }
            let stats = RankStats {
                true_rank: rank(t)?,
                estimated_rank: rank(e)?,
            };
            (linalg::vec_of(&(e - t)), t.norm(), None, Some(stats))
        }
        _ => return Err(Error::param("estimate", "estimate and truth must both be vectors or both matrices")),
    };
    let weighted = match sigma {
        None => None,
        Some(s) => {
            if s.nrows() != diff.len() {
                return Err(Error::dim("Sigma", shape(diff.len(), diff.len()), shape(s.nrows(), s.ncols())));
            }
            Some((linalg::sym_sqrt(s)? * &diff).norm())
        }
    };
    let l2 = diff.norm();
    Ok(ErrorMetrics {
        l2,
        weighted,
        relative: if truth_norm > 0.0 { l2 / truth_norm } else { f64::NAN },
        support,
        rank: rank_stats,
    })
}
