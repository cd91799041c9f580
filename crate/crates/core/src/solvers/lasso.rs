use nalgebra::DVector;

use super::proximal::{self, Composite};
use super::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{RegressionProblem, SolverResult, TuningParams};
use crate::penalties::{self, HuberScale};

struct HuberLasso<'a> {
    p: &'a RegressionProblem,
    scale: HuberScale,
    lambda_star: f64,
}

impl Composite for HuberLasso<'_> {
    type P = DVector<f64>;

    fn smooth(&self, beta: &DVector<f64>) -> f64 {
        let r = &self.p.y - &self.p.x * beta;
        penalties::huber_data_term(&r, self.scale, self.p.n())
    }

    fn grad(&self, beta: &DVector<f64>) -> DVector<f64> {
        let r = &self.p.y - &self.p.x * beta;
        -self.p.x.tr_mul(&penalties::huber_weights(&r, self.scale, self.p.n()))
    }

    fn nonsmooth(&self, beta: &DVector<f64>) -> Result<f64> {
        Ok(self.lambda_star * penalties::l1_norm(beta))
    }

    fn prox(&self, v: &DVector<f64>, step: f64) -> Result<DVector<f64>> {
        penalties::soft_threshold(v, step * self.lambda_star)
    }
}

/// Minimises the Huber-loss l1-penalized objective over `beta`.
///
/// Starts from `init` or zero. Non-convergence is reported through
/// `converged == false`, not as an error.
pub fn solve_adversarial_lasso(
    p: &RegressionProblem,
    tp: &TuningParams,
    cfg: &SolverConfig,
    init: Option<&DVector<f64>>,
) -> Result<SolverResult<DVector<f64>>> {
    p.validate()?;
    tp.validate()?;
    let x0 = match init {
        Some(b) if b.len() != p.d() => return Err(Error::dim("initial beta", p.d(), b.len())),
        Some(b) => b.clone(),
        None => DVector::zeros(p.d()),
    };
    let obj = HuberLasso {
        p,
        scale: HuberScale::from_tuning(tp, p.n())?,
        lambda_star: tp.lambda_star,
    };
    let op = linalg::op_norm_estimate(&p.x, cfg.power_iters);
    proximal::minimize(&obj, x0, cfg, op * op / p.n() as f64)
}
