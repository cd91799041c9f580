//! Monotone accelerated proximal gradient.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::{SolverConfig, StepRule};
use crate::error::{Error, Result};
use crate::math;
use crate::model::SolverResult;

/// Smallest step tried before backtracking gives up.
const MIN_STEP: f64 = 1e-300;

/// Relative increase still treated as roundoff when a plain step fails to descend.
const STALL_TOL: f64 = 1e-10;

pub(crate) trait Point: Clone {
    /// `a * self + b * other`.
    fn lin(&self, a: f64, other: &Self, b: f64) -> Self;
    fn inner(&self, other: &Self) -> f64;
}

impl Point for DVector<f64> {
    fn lin(&self, a: f64, other: &Self, b: f64) -> Self {
        self * a + other * b
    }

    fn inner(&self, other: &Self) -> f64 {
        self.dot(other)
    }
}

impl Point for DMatrix<f64> {
    fn lin(&self, a: f64, other: &Self, b: f64) -> Self {
        self * a + other * b
    }

    fn inner(&self, other: &Self) -> f64 {
        self.dot(other)
    }
}

/// `F(x) = f(x) + g(x)` with `f` smooth and `g` prox-friendly.
pub(crate) trait Composite {
    type P: Point;

    fn smooth(&self, x: &Self::P) -> f64;
    fn grad(&self, x: &Self::P) -> Self::P;
    fn nonsmooth(&self, x: &Self::P) -> Result<f64>;
    /// `argmin_z g(z) + ||z - v||^2 / (2 step)`.
    fn prox(&self, v: &Self::P, step: f64) -> Result<Self::P>;
}

/// Minimises `obj` from `x0`, which must lie in the domain of `g`.
///
/// `lipschitz` is an estimate of the smooth part's gradient Lipschitz constant
/// used for the first step when `cfg.initial_step` is unset.
pub(crate) fn minimize<C: Composite>(
    obj: &C,
    x0: C::P,
    cfg: &SolverConfig,
    lipschitz: f64,
) -> Result<SolverResult<C::P>> {
    cfg.validate()?;
    let mut step = match cfg.initial_step {
        Some(s) => s,
        None if lipschitz > 0.0 && lipschitz.is_finite() => 1.0 / lipschitz,
        None => 1.0,
    };

    let mut x = x0;
    let mut f_x = obj.smooth(&x) + obj.nonsmooth(&x)?;
    if !f_x.is_finite() {
        return Err(Error::NonFinite { field: "initial objective", index: 0 });
    }
    let mut trace = Vec::with_capacity(cfg.max_iters.min(4096) + 1);
    trace.push(f_x);

    let mut y = x.clone();
    // y coincides with x: the next step is a plain proximal gradient step
    let mut plain = true;
    let mut t = 1.0_f64;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        let f_y = obj.smooth(&y);
        let g_y = obj.grad(&y);

        let (z, f_z) = loop {
            let z = obj.prox(&y.lin(1.0, &g_y, -step), step)?;
            let f_z = obj.smooth(&z);
            if cfg.step_rule == StepRule::Fixed {
                break (z, f_z);
            }
            let d = z.lin(1.0, &y, -1.0);
            let model = f_y + g_y.inner(&d) + d.inner(&d) / (2.0 * step);
            let slack = 1e-13 * f_y.abs().max(f_z.abs()).max(f64::MIN_POSITIVE);
            if f_z <= model + slack {
                break (z, f_z);
            }
            step *= cfg.backtrack_factor;
            if step < MIN_STEP {
                return Err(Error::param("step", "backtracking collapsed the step size"));
            }
        };
        let big_f_z = f_z + obj.nonsmooth(&z)?;

        if big_f_z <= f_x {
            let change = f_x - big_f_z;
            let scale = f_x.abs().max(f64::MIN_POSITIVE);
            if cfg.accelerate {
                let t_next = 0.5 * (1.0 + math::sqrt(1.0 + 4.0 * t * t));
                y = z.lin(1.0 + (t - 1.0) / t_next, &x, -(t - 1.0) / t_next);
                t = t_next;
                plain = false;
            } else {
                y = z.clone();
            }
            x = z;
            f_x = big_f_z;
            trace.push(f_x);
            if change <= cfg.rel_tol * scale {
                converged = true;
                break;
            }
        } else if plain || !cfg.accelerate {
            // a plain step from x failed to descend: numerically stationary, or
            // the prox is inexact and no progress is possible
            converged = big_f_z - f_x <= STALL_TOL * f_x.abs().max(1.0);
            break;
        } else if cfg.restart {
            t = 1.0;
            y = x.clone();
            plain = true;
        } else {
            // monotone FISTA: keep x, steer momentum through the rejected candidate
            let t_next = 0.5 * (1.0 + math::sqrt(1.0 + 4.0 * t * t));
            y = x.lin(1.0 - t / t_next, &z, t / t_next);
            t = t_next;
            trace.push(f_x);
        }
    }
    Ok(SolverResult {
        estimate: x,
        objective_trace: trace,
        iterations,
        converged,
        final_step_size: step,
    })
}
