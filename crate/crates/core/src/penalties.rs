//! Huber loss, penalized objectives, gradients of their smooth parts, and the
//! proximal and projection operators used by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{shape, Error, Result};
use crate::linalg;
use crate::math;
use crate::model::{RegressionProblem, TraceProblem, TuningParams};

/// The scale `lambda_o * sqrt(n)` dividing residuals inside the Huber loss.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HuberScale(f64);

impl HuberScale {
    pub fn new(scale: f64) -> Result<Self> {
        if scale > 0.0 && scale.is_finite() {
            Ok(HuberScale(scale))
        } else {
            Err(Error::param("huber scale", alloc::format!("must be positive, got {scale}")))
        }
    }

    pub fn from_tuning(tp: &TuningParams, n: usize) -> Result<Self> {
        HuberScale::new(tp.huber_scale(n))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// `H(t) = t^2/2` for `|t| <= 1`, `|t| - 1/2` otherwise. No finiteness check.
#[inline]
pub fn huber(t: f64) -> f64 {
    let a = t.abs();
    if a <= 1.0 {
        0.5 * t * t
    } else {
        a - 0.5
    }
}

/// `h(t) = dH/dt`: `t` on `[-1, 1]`, `sgn(t)` outside. No finiteness check.
#[inline]
pub fn huber_grad(t: f64) -> f64 {
    t.clamp(-1.0, 1.0)
}

pub fn huber_value(t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::NonFinite { field: "huber argument", index: 0 });
    }
    Ok(huber(t))
}

pub fn huber_deriv(t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::NonFinite { field: "huber argument", index: 0 });
    }
    Ok(huber_grad(t))
}

/// `lambda_o^2 * sum_i H(r_i / (lambda_o sqrt(n)))`, written as `(c^2 / n) sum_i H(r_i / c)`.
pub fn huber_data_term(residuals: &DVector<f64>, scale: HuberScale, n: usize) -> f64 {
    let c = scale.get();
    let sum: f64 = residuals.iter().map(|r| huber(r / c)).sum();
    c * c / n as f64 * sum
}

/// `(c / n) * (h(r_i / c))_i`, the weights for which `-sum_i w_i X_i` is the data-term gradient.
pub fn huber_weights(residuals: &DVector<f64>, scale: HuberScale, n: usize) -> DVector<f64> {
    let c = scale.get();
    residuals.map(|r| c / n as f64 * huber_grad(r / c))
}

pub fn l1_norm(v: &DVector<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn lasso_residuals(p: &RegressionProblem, beta: &DVector<f64>) -> Result<DVector<f64>> {
    if beta.len() != p.d() {
        return Err(Error::dim("beta", p.d(), beta.len()));
    }
    Ok(&p.y - &p.x * beta)
}

fn trace_residuals(p: &TraceProblem, b: &DMatrix<f64>) -> Result<DVector<f64>> {
    if (b.nrows(), b.ncols()) != p.dims() {
        return Err(Error::dim("B", shape(p.d1, p.d2), shape(b.nrows(), b.ncols())));
    }
    Ok(&p.y - p.forward(b))
}

/// Huber-loss data term plus `lambda_* ||beta||_1`.
pub fn objective_lasso(p: &RegressionProblem, beta: &DVector<f64>, tp: &TuningParams) -> Result<f64> {
    let r = lasso_residuals(p, beta)?;
    let scale = HuberScale::from_tuning(tp, p.n())?;
    Ok(huber_data_term(&r, scale, p.n()) + tp.lambda_star * l1_norm(beta))
}

/// Smooth part of [`objective_lasso`] only.
pub fn smooth_lasso(p: &RegressionProblem, beta: &DVector<f64>, tp: &TuningParams) -> Result<f64> {
    let r = lasso_residuals(p, beta)?;
    Ok(huber_data_term(&r, HuberScale::from_tuning(tp, p.n())?, p.n()))
}

/// `-(lambda_o / sqrt(n)) * sum_i h((y_i - <x_i, beta>) / (lambda_o sqrt(n))) x_i`.
pub fn grad_smooth_lasso(p: &RegressionProblem, beta: &DVector<f64>, tp: &TuningParams) -> Result<DVector<f64>> {
    let r = lasso_residuals(p, beta)?;
    let w = huber_weights(&r, HuberScale::from_tuning(tp, p.n())?, p.n());
    Ok(-p.x.tr_mul(&w))
}

/// Huber-loss data term plus `lambda_* ||B||_*`.
///
/// With `constrained`, `B` must also satisfy `||B||_inf <= inf_ball_radius`.
pub fn objective_trace(p: &TraceProblem, b: &DMatrix<f64>, tp: &TuningParams, constrained: bool) -> Result<f64> {
    let r = trace_residuals(p, b)?;
    if constrained {
        let radius = tp
            .inf_ball_radius
            .ok_or_else(|| Error::param("inf_ball_radius", "required for the constrained objective"))?;
        let norm = linalg::inf_norm(b);
        if norm > radius + 1e-12 * radius.max(1.0) {
            return Err(Error::Infeasible { norm, radius });
        }
    }
    let scale = HuberScale::from_tuning(tp, p.n())?;
    Ok(huber_data_term(&r, scale, p.n()) + tp.lambda_star * linalg::nuclear_norm(b)?)
}

pub fn smooth_trace(p: &TraceProblem, b: &DMatrix<f64>, tp: &TuningParams) -> Result<f64> {
    let r = trace_residuals(p, b)?;
    Ok(huber_data_term(&r, HuberScale::from_tuning(tp, p.n())?, p.n()))
}

/// Matrix analogue of [`grad_smooth_lasso`]: `-(lambda_o / sqrt(n)) sum_i h(r_i) X_i`.
pub fn grad_smooth_trace(p: &TraceProblem, b: &DMatrix<f64>, tp: &TuningParams) -> Result<DMatrix<f64>> {
    let r = trace_residuals(p, b)?;
    let w = huber_weights(&r, HuberScale::from_tuning(tp, p.n())?, p.n());
    Ok(-p.adjoint(&w))
}

fn check_tau(tau: f64) -> Result<()> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::param("tau", alloc::format!("threshold must be nonnegative, got {tau}")))
    }
}

#[inline]
pub(crate) fn shrink(v: f64, tau: f64) -> f64 {
    let a = v.abs() - tau;
    if a > 0.0 {
        math::sgn(v) * a
    } else {
        0.0
    }
}

/// Elementwise `sgn(v_j) max(|v_j| - tau, 0)`; exactly zero at `|v_j| == tau`.
pub fn soft_threshold(v: &DVector<f64>, tau: f64) -> Result<DVector<f64>> {
    check_tau(tau)?;
    Ok(v.map(|x| shrink(x, tau)))
}

/// Proximal operator of `tau ||.||_*`: soft-threshold the singular values of `m`.
pub fn singular_value_threshold(m: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    check_tau(tau)?;
    if tau == 0.0 || m.is_empty() {
        return Ok(m.clone());
    }
    let svd = linalg::svd(m)?;
    let u = svd.u.as_ref().ok_or(Error::Decomposition("missing U"))?;
    let v_t = svd.v_t.as_ref().ok_or(Error::Decomposition("missing V^T"))?;
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (k, s) in svd.singular_values.iter().enumerate() {
        let shrunk = s - tau;
        if shrunk > 0.0 {
            out += shrunk * u.column(k) * v_t.row(k);
        }
    }
    Ok(out)
}

/// Entrywise clamp to `[-radius, radius]`.
pub fn project_inf_ball(m: &DMatrix<f64>, radius: f64) -> Result<DMatrix<f64>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param("radius", alloc::format!("must be positive, got {radius}")));
    }
    Ok(m.map(|x| x.clamp(-radius, radius)))
}
