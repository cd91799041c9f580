//! Proximal-gradient solvers for the three Huber estimators, plus the
//! alternating `(beta, theta)` oracle for the joint least-squares formulation.
//!
//! All solvers share one engine ([`proximal`]): FISTA momentum, backtracking on
//! the descent lemma of the smooth part, and a monotone safeguard that rejects
//! any candidate raising the objective. Convergence is declared on the relative
//! change of the objective, not on a gradient norm, since the objectives are
//! nonsmooth.

mod joint;
mod lasso;
pub(crate) mod proximal;
mod trace;

pub use joint::{joint_objective, solve_joint_oracle, JointResult};
pub use lasso::solve_adversarial_lasso;
pub use trace::{prox_nuclear_inf_ball, solve_matrix_completion, solve_matrix_cs};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// Constant step `initial_step` (or `1 / L` with `L` an upper bound).
    Fixed,
    /// Shrink the step by `backtrack_factor` until the descent lemma holds.
    Backtracking,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Stop once `|F_k - F_{k+1}| <= rel_tol * |F_k|` on an accepted step.
    pub rel_tol: f64,
    pub step_rule: StepRule,
    pub backtrack_factor: f64,
    /// `None` means `n / ||X||_op^2`, with the norm estimated by power iteration.
    pub initial_step: Option<f64>,
    pub power_iters: usize,
    /// Nesterov momentum. Off gives plain ISTA.
    pub accelerate: bool,
    /// Reset momentum whenever a candidate raises the objective. Without it the
    /// monotone FISTA update is used instead.
    pub restart: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 5000,
            rel_tol: 1e-9,
            step_rule: StepRule::Backtracking,
            backtrack_factor: 0.5,
            initial_step: None,
            power_iters: 20,
            accelerate: true,
            restart: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be at least 1"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::param("rel_tol", alloc::format!("must lie in (0, 1), got {}", self.rel_tol)));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::param(
                "backtrack_factor",
                alloc::format!("must lie in (0, 1), got {}", self.backtrack_factor),
            ));
        }
        if let Some(s) = self.initial_step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::param("initial_step", alloc::format!("must be positive, got {s}")));
            }
        }
        Ok(())
    }

    /// Tight settings used when solutions from two formulations are compared.
    pub fn precise() -> Self {
        SolverConfig {
            max_iters: 50_000,
            rel_tol: 1e-15,
            ..SolverConfig::default()
        }
    }
}
