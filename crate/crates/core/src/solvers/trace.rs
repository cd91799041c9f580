use alloc::vec;

use nalgebra::DMatrix;

use super::proximal::{self, Composite};
use super::SolverConfig;
use crate::error::{shape, Error, Result};
use crate::linalg;
use crate::model::{SolverResult, TraceDesign, TraceProblem, TuningParams};
use crate::penalties::{self, HuberScale};

/// Inner iterations of the Dykstra-type splitting in [`prox_nuclear_inf_ball`].
const DYKSTRA_MAX_ITERS: usize = 500;
const DYKSTRA_TOL: f64 = 1e-13;

struct HuberTrace<'a> {
    p: &'a TraceProblem,
    scale: HuberScale,
    lambda_star: f64,
    radius: Option<f64>,
}

impl Composite for HuberTrace<'_> {
    type P = DMatrix<f64>;

    fn smooth(&self, b: &DMatrix<f64>) -> f64 {
        let r = &self.p.y - self.p.forward(b);
        penalties::huber_data_term(&r, self.scale, self.p.n())
    }

    fn grad(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let r = &self.p.y - self.p.forward(b);
        -self.p.adjoint(&penalties::huber_weights(&r, self.scale, self.p.n()))
    }

    fn nonsmooth(&self, b: &DMatrix<f64>) -> Result<f64> {
        Ok(self.lambda_star * linalg::nuclear_norm(b)?)
    }

    fn prox(&self, v: &DMatrix<f64>, step: f64) -> Result<DMatrix<f64>> {
        match self.radius {
            None => penalties::singular_value_threshold(v, step * self.lambda_star),
            Some(r) => prox_nuclear_inf_ball(v, step * self.lambda_star, r),
        }
    }
}

/// Proximal operator of `tau ||.||_* + indicator(||.||_inf <= radius)`.
///
/// Alternates singular value thresholding and the box projection with Dykstra
/// correction terms, which converges to the exact prox of the sum. The last
/// operation applied is the projection, so the output is always feasible.
pub fn prox_nuclear_inf_ball(v: &DMatrix<f64>, tau: f64, radius: f64) -> Result<DMatrix<f64>> {
    let first = penalties::singular_value_threshold(v, tau)?;
    if linalg::inf_norm(&first) <= radius {
        return Ok(first);
    }
    let mut x = v.clone();
    let mut p = DMatrix::zeros(v.nrows(), v.ncols());
    let mut q = DMatrix::zeros(v.nrows(), v.ncols());
    for _ in 0..DYKSTRA_MAX_ITERS {
        let y = penalties::singular_value_threshold(&(&x + &p), tau)?;
        p = &x + &p - &y;
        let x_next = penalties::project_inf_ball(&(&y + &q), radius)?;
        q = &y + &q - &x_next;
        let moved = (&x_next - &x).norm();
        x = x_next;
        if moved <= DYKSTRA_TOL * x.norm().max(1.0) {
            break;
        }
    }
    Ok(x)
}

fn lipschitz_estimate(p: &TraceProblem, power_iters: usize) -> f64 {
    let n = p.n() as f64;
    match &p.design {
        TraceDesign::Mask(entries) => {
            // X^T X is diagonal with d_mc^2 times the visit count of each cell
            let mut counts = vec![0usize; p.d1 * p.d2];
            for e in entries {
                counts[e.col * p.d1 + e.row] += 1;
            }
            let max = counts.into_iter().max().unwrap_or(0) as f64;
            p.d_mc() * p.d_mc() * max / n
        }
        TraceDesign::Dense(_) => {
            let op = linalg::op_norm_estimate(&p.design_matrix(), power_iters);
            op * op / n
        }
    }
}

fn initial_matrix(p: &TraceProblem, init: Option<&DMatrix<f64>>) -> Result<DMatrix<f64>> {
    match init {
        Some(b) if (b.nrows(), b.ncols()) != p.dims() => Err(Error::dim(
            "initial B",
            shape(p.d1, p.d2),
            shape(b.nrows(), b.ncols()),
        )),
        Some(b) => Ok(b.clone()),
        None => Ok(DMatrix::zeros(p.d1, p.d2)),
    }
}

/// Minimises the Huber-loss nuclear-norm-penalized trace regression objective.
pub fn solve_matrix_cs(
    p: &TraceProblem,
    tp: &TuningParams,
    cfg: &SolverConfig,
    init: Option<&DMatrix<f64>>,
) -> Result<SolverResult<DMatrix<f64>>> {
    p.validate()?;
    tp.validate()?;
    let x0 = initial_matrix(p, init)?;
    let obj = HuberTrace {
        p,
        scale: HuberScale::from_tuning(tp, p.n())?,
        lambda_star: tp.lambda_star,
        radius: None,
    };
    proximal::minimize(&obj, x0, cfg, lipschitz_estimate(p, cfg.power_iters))
}

/// Matrix completion: the trace objective restricted to `||B||_inf <= inf_ball_radius`.
///
/// Requires a mask design. An infeasible `init` is projected onto the ball first.
pub fn solve_matrix_completion(
    p: &TraceProblem,
    tp: &TuningParams,
    cfg: &SolverConfig,
    init: Option<&DMatrix<f64>>,
) -> Result<SolverResult<DMatrix<f64>>> {
    p.validate()?;
    tp.validate()?;
    if !p.design.is_mask() {
        return Err(Error::param("design", "matrix completion needs mask-encoded covariates"));
    }
    let radius = tp
        .inf_ball_radius
        .ok_or_else(|| Error::param("inf_ball_radius", "required for matrix completion"))?;
    let x0 = penalties::project_inf_ball(&initial_matrix(p, init)?, radius)?;
    let obj = HuberTrace {
        p,
        scale: HuberScale::from_tuning(tp, p.n())?,
        lambda_star: tp.lambda_star,
        radius: Some(radius),
    };
    proximal::minimize(&obj, x0, cfg, lipschitz_estimate(p, cfg.power_iters))
}
