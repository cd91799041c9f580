//! Huber-loss penalized estimation under adversarial output contamination.
//!
//! Observations follow `y_i = <X_i, B*> + xi_i + sqrt(n) * theta*_i`, where an
//! adversary controls an `o`-sparse vector `theta*`. The estimators minimise
//!
//! ```text
//! lambda_o^2 * sum_i H((y_i - <X_i, B>) / (lambda_o * sqrt(n))) + lambda_* * pen(B)
//! ```
//!
//! with `H` the Huber loss and `pen` the l1 norm (sparse linear regression) or
//! the nuclear norm (trace regression, matrix completion). Matrix completion
//! additionally constrains `||B||_inf`.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the experiment
//! harness and the command line live in the `hubreg` crate.
//!
//! Layout:
//! - [`model`]: problem types, the trace inner product and validation.
//! - [`penalties`]: Huber loss, objectives, gradients and proximal operators.
//! - [`solvers`]: accelerated proximal gradient solvers and the joint
//!   `(beta, theta)` alternating oracle.
//! - [`datagen`]: synthetic designs, noise, truths and adversaries.
//! - [`diagnostics`]: tuning calculators, RE/MRE search, spikiness, error
//!   metrics and the curvature probe.

#![no_std]
#![allow(clippy::needless_range_loop)]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod datagen;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod math;
pub mod model;
pub mod penalties;
pub mod solvers;

pub use error::{Error, Result};
pub use model::{
    trace_inner, MaskEntry, RegressionProblem, Sign, SolverResult, TraceDesign, TraceProblem,
    TuningParams,
};
pub use nalgebra::{DMatrix, DVector};
