//! Observation models and the types every solver, generator and diagnostic shares.
//!
//! A [`RegressionProblem`] stores `y_i = <x_i, beta*> + xi_i + sqrt(n) theta*_i`;
//! a [`TraceProblem`] stores the matrix analogue `y_i = <X_i, B*> + ...` with
//! either dense covariate matrices or the completion mask encoding
//! `X_i = d_mc * eps_i * e_k e_l^T`. Contamination vectors are kept before the
//! `sqrt(n)` scaling, which is applied only when responses are generated.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{shape, Error, Result};
use crate::math;

/// Dense covariates are refused above this many entries per matrix.
pub const MAX_DENSE_ENTRIES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn from_value(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }
}

/// One observed cell of a completion design: `X_i = d_mc * sign * e_row e_col^T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskEntry {
    pub row: usize,
    pub col: usize,
    pub sign: Sign,
}

/// A single covariate matrix, borrowed from a problem or built ad hoc.
#[derive(Debug, Clone, Copy)]
pub enum Covariate<'a> {
    Dense(&'a DMatrix<f64>),
    /// Mask entry together with the `(d1, d2)` shape it lives in.
    Mask(MaskEntry, (usize, usize)),
}

impl Covariate<'_> {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Covariate::Dense(m) => (m.nrows(), m.ncols()),
            Covariate::Mask(_, dims) => *dims,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Covariate::Dense(m) => (*m).clone(),
            Covariate::Mask(e, (d1, d2)) => {
                let mut m = DMatrix::zeros(*d1, *d2);
                m[(e.row, e.col)] = d_mc(*d1, *d2) * e.sign.value();
                m
            }
        }
    }
}

/// `d_mc = sqrt(d1 * d2)`.
pub fn d_mc(d1: usize, d2: usize) -> f64 {
    math::sqrt((d1 * d2) as f64)
}

/// `<X_i, B> = sum_kl X_kl B_kl`; for a mask entry this is `d_mc * eps * B[k, l]`.
pub fn trace_inner(xi: Covariate<'_>, b: &DMatrix<f64>) -> Result<f64> {
    let (r, c) = xi.shape();
    if (r, c) != (b.nrows(), b.ncols()) {
        return Err(Error::dim("trace_inner", shape(r, c), shape(b.nrows(), b.ncols())));
    }
    Ok(match xi {
        Covariate::Dense(m) => m.dot(b),
        Covariate::Mask(e, (d1, d2)) => {
            if e.row >= d1 || e.col >= d2 {
                return Err(Error::Inconsistent {
                    field: "mask",
                    index: 0,
                    reason: alloc::format!("cell ({}, {}) outside {}", e.row, e.col, shape(d1, d2)),
                });
            }
            d_mc(d1, d2) * e.sign.value() * b[(e.row, e.col)]
        }
    })
}

/// Sparse linear regression with contaminated outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionProblem {
    pub y: DVector<f64>,
    /// `n x d`; row `i` is `x_i`.
    pub x: DMatrix<f64>,
    pub beta_true: Option<DVector<f64>>,
    /// Contamination before the `sqrt(n)` factor.
    pub theta_true: Option<DVector<f64>>,
    /// Sorted indices of contaminated responses.
    pub outlier_index_set: Option<Vec<usize>>,
}

impl RegressionProblem {
    pub fn new(y: DVector<f64>, x: DMatrix<f64>) -> Self {
        RegressionProblem {
            y,
            x,
            beta_true: None,
            theta_true: None,
            outlier_index_set: None,
        }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// Number of contaminated responses, when known.
    pub fn o(&self) -> Option<usize> {
        self.outlier_index_set.as_ref().map(Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.y.len();
        if n == 0 {
            return Err(Error::dim("responses", "n >= 1", 0));
        }
        if self.x.nrows() != n {
            return Err(Error::dim(
                "covariates rows vs responses",
                alloc::format!("{n} rows"),
                shape(self.x.nrows(), self.x.ncols()),
            ));
        }
        check_finite(self.y.as_slice(), "y")?;
        check_finite(self.x.as_slice(), "X")?;
        if let Some(b) = &self.beta_true {
            if b.len() != self.d() {
                return Err(Error::dim("beta_true", self.d(), b.len()));
            }
            check_finite(b.as_slice(), "beta_true")?;
        }
        check_contamination(n, self.theta_true.as_ref(), self.outlier_index_set.as_deref())
    }

    /// Consumes the problem and returns it only if every invariant holds.
    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceDesign {
    Dense(Vec<DMatrix<f64>>),
    Mask(Vec<MaskEntry>),
}

impl TraceDesign {
    pub fn len(&self) -> usize {
        match self {
            TraceDesign::Dense(v) => v.len(),
            TraceDesign::Mask(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_mask(&self) -> bool {
        matches!(self, TraceDesign::Mask(_))
    }
}

/// Trace regression (matrix compressed sensing or completion) with contaminated outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceProblem {
    pub y: DVector<f64>,
    pub design: TraceDesign,
    pub d1: usize,
    pub d2: usize,
    pub b_true: Option<DMatrix<f64>>,
    pub theta_true: Option<DVector<f64>>,
    pub outlier_index_set: Option<Vec<usize>>,
}

impl TraceProblem {
    pub fn new(y: DVector<f64>, design: TraceDesign, d1: usize, d2: usize) -> Self {
        TraceProblem {
            y,
            design,
            d1,
            d2,
            b_true: None,
            theta_true: None,
            outlier_index_set: None,
        }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d1, self.d2)
    }

    pub fn d_mc(&self) -> f64 {
        d_mc(self.d1, self.d2)
    }

    pub fn o(&self) -> Option<usize> {
        self.outlier_index_set.as_ref().map(Vec::len)
    }

    pub fn covariate(&self, i: usize) -> Covariate<'_> {
        match &self.design {
            TraceDesign::Dense(v) => Covariate::Dense(&v[i]),
            TraceDesign::Mask(v) => Covariate::Mask(v[i], (self.d1, self.d2)),
        }
    }

    /// `(<X_i, B>)_i` without shape checks; `b` must be `d1 x d2`.
    pub fn forward(&self, b: &DMatrix<f64>) -> DVector<f64> {
        debug_assert_eq!((b.nrows(), b.ncols()), (self.d1, self.d2));
        match &self.design {
            TraceDesign::Dense(v) => DVector::from_iterator(v.len(), v.iter().map(|x| x.dot(b))),
            TraceDesign::Mask(v) => {
                let s = self.d_mc();
                DVector::from_iterator(v.len(), v.iter().map(|e| s * e.sign.value() * b[(e.row, e.col)]))
            }
        }
    }

    /// `sum_i w_i X_i`.
    pub fn adjoint(&self, w: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.d1, self.d2);
        match &self.design {
            TraceDesign::Dense(v) => {
                for (x, wi) in v.iter().zip(w.iter()) {
                    if *wi != 0.0 {
                        out += x * *wi;
                    }
                }
            }
            TraceDesign::Mask(v) => {
                let s = self.d_mc();
                for (e, wi) in v.iter().zip(w.iter()) {
                    out[(e.row, e.col)] += s * e.sign.value() * wi;
                }
            }
        }
        out
    }

    /// Same problem with every covariate expanded to a dense matrix.
    pub fn densified(&self) -> TraceProblem {
        let dense = (0..self.n()).map(|i| self.covariate(i).to_dense()).collect();
        TraceProblem {
            design: TraceDesign::Dense(dense),
            ..self.clone()
        }
    }

    /// The `n x (d1 d2)` matrix whose row `i` is `vec(X_i)`.
    pub fn design_matrix(&self) -> DMatrix<f64> {
        let p = self.d1 * self.d2;
        let mut a = DMatrix::zeros(self.n(), p);
        for i in 0..self.n() {
            match self.covariate(i) {
                Covariate::Dense(m) => {
                    for (j, v) in m.as_slice().iter().enumerate() {
                        a[(i, j)] = *v;
                    }
                }
                Covariate::Mask(e, _) => {
                    a[(i, e.col * self.d1 + e.row)] = self.d_mc() * e.sign.value();
                }
            }
        }
        a
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.y.len();
        if n == 0 {
            return Err(Error::dim("responses", "n >= 1", 0));
        }
        if self.d1 == 0 || self.d2 == 0 {
            return Err(Error::dim("trace dims", "d1, d2 >= 1", shape(self.d1, self.d2)));
        }
        if self.design.len() != n {
            return Err(Error::dim("covariates vs responses", n, self.design.len()));
        }
        check_finite(self.y.as_slice(), "y")?;
        match &self.design {
            TraceDesign::Dense(v) => {
                if self.d1 * self.d2 > MAX_DENSE_ENTRIES {
                    return Err(Error::TooLarge {
                        what: "dense covariate matrices",
                        limit: alloc::format!("{MAX_DENSE_ENTRIES} entries"),
                        found: shape(self.d1, self.d2),
                    });
                }
                for (i, x) in v.iter().enumerate() {
                    if (x.nrows(), x.ncols()) != (self.d1, self.d2) {
                        return Err(Error::Inconsistent {
                            field: "X_i",
                            index: i,
                            reason: alloc::format!(
                                "shape {} differs from {}",
                                shape(x.nrows(), x.ncols()),
                                shape(self.d1, self.d2)
                            ),
                        });
                    }
                    if x.iter().any(|v| !v.is_finite()) {
                        return Err(Error::NonFinite { field: "X_i", index: i });
                    }
                }
            }
            TraceDesign::Mask(v) => {
                for (i, e) in v.iter().enumerate() {
                    if e.row >= self.d1 || e.col >= self.d2 {
                        return Err(Error::Inconsistent {
                            field: "mask",
                            index: i,
                            reason: alloc::format!(
                                "cell ({}, {}) outside {}",
                                e.row,
                                e.col,
                                shape(self.d1, self.d2)
                            ),
                        });
                    }
                }
            }
        }
        if let Some(b) = &self.b_true {
            if (b.nrows(), b.ncols()) != (self.d1, self.d2) {
                return Err(Error::dim("B_true", shape(self.d1, self.d2), shape(b.nrows(), b.ncols())));
            }
            check_finite(b.as_slice(), "B_true")?;
        }
        check_contamination(n, self.theta_true.as_ref(), self.outlier_index_set.as_deref())
    }

    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }
}

fn check_finite(values: &[f64], field: &'static str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { field, index }),
        None => Ok(()),
    }
}

fn check_contamination(n: usize, theta: Option<&DVector<f64>>, set: Option<&[usize]>) -> Result<()> {
    if let Some(t) = theta {
        if t.len() != n {
            return Err(Error::dim("theta_true", n, t.len()));
        }
        check_finite(t.as_slice(), "theta_true")?;
    }
    if let Some(s) = set {
        if s.len() > n {
            return Err(Error::dim("outlier_index_set size", alloc::format!("<= {n}"), s.len()));
        }
        for (k, &i) in s.iter().enumerate() {
            if i >= n {
                return Err(Error::Inconsistent {
                    field: "outlier_index_set",
                    index: i,
                    reason: alloc::format!("index out of range for n = {n}"),
                });
            }
            if k > 0 && s[k - 1] >= i {
                return Err(Error::Inconsistent {
                    field: "outlier_index_set",
                    index: i,
                    reason: "indices must be strictly increasing".into(),
                });
            }
        }
    }
    if let (Some(t), Some(s)) = (theta, set) {
        let mut members = s.iter().peekable();
        for (i, v) in t.iter().enumerate() {
            let listed = members.next_if(|&&j| j == i).is_some();
            if listed != (*v != 0.0) {
                let reason = if listed {
                    "listed as outlier but theta_true is zero"
                } else {
                    "theta_true nonzero but index not in outlier_index_set"
                };
                return Err(Error::Inconsistent {
                    field: "theta_true",
                    index: i,
                    reason: reason.into(),
                });
            }
        }
    }
    Ok(())
}

/// Huber transition and penalty levels, plus the completion constraint radius.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningParams {
    pub lambda_o: f64,
    pub lambda_star: f64,
    /// `alpha* / d_mc`; completion only.
    pub inf_ball_radius: Option<f64>,
    /// Numerical constants used to derive the levels (`c_lasso`, `c_mcs`, ...).
    pub constants: BTreeMap<String, f64>,
}

impl TuningParams {
    pub fn new(lambda_o: f64, lambda_star: f64) -> Result<Self> {
        let tp = TuningParams {
            lambda_o,
            lambda_star,
            inf_ball_radius: None,
            constants: BTreeMap::new(),
        };
        tp.validate()?;
        Ok(tp)
    }

    pub fn with_radius(mut self, radius: f64) -> Result<Self> {
        self.inf_ball_radius = Some(radius);
        self.validate()?;
        Ok(self)
    }

    /// `lambda_o * sqrt(n)`, the denominator inside the Huber loss.
    pub fn huber_scale(&self, n: usize) -> f64 {
        self.lambda_o * math::sqrt(n as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_o > 0.0 && self.lambda_o.is_finite()) {
            return Err(Error::param("lambda_o", alloc::format!("must be positive and finite, got {}", self.lambda_o)));
        }
        if !(self.lambda_star > 0.0 && self.lambda_star.is_finite()) {
            return Err(Error::param(
                "lambda_star",
                alloc::format!("must be positive and finite, got {}", self.lambda_star),
            ));
        }
        if let Some(r) = self.inf_ball_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::param("inf_ball_radius", alloc::format!("must be positive, got {r}")));
            }
        }
        for (name, v) in &self.constants {
            if !(*v > 0.0 && v.is_finite()) {
                return Err(Error::param("constants", alloc::format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Output of every iterative solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult<T> {
    pub estimate: T,
    /// Objective at the initial point followed by one value per accepted iterate.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_step_size: f64,
}

impl<T> SolverResult<T> {
    pub fn final_objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(f64::NAN)
    }

    /// True when no step increases the objective by more than `tol` (relative to `max(1, |F|)`).
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.objective_trace
            .windows(2)
            .all(|w| w[1] <= w[0] + tol * w[0].abs().max(1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn small_regression() -> RegressionProblem {
        let x = DMatrix::from_fn(10, 3, |i, j| (i + j) as f64 * 0.1);
        let y = DVector::from_fn(10, |i, _| i as f64);
        RegressionProblem::new(y, x)
    }

    #[test]
    fn trace_inner_identity_is_trace() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let id = DMatrix::identity(2, 2);
        assert_eq!(trace_inner(Covariate::Dense(&id), &b).unwrap(), 5.0);
    }

    #[test]
    fn trace_inner_mask_scales_by_dmc() {
        let mut b = DMatrix::zeros(4, 4);
        b[(0, 1)] = 0.5;
        let e = MaskEntry { row: 0, col: 1, sign: Sign::Minus };
        assert_eq!(trace_inner(Covariate::Mask(e, (4, 4)), &b).unwrap(), -2.0);
    }

    #[test]
    fn trace_inner_zero_covariate() {
        let z = DMatrix::zeros(3, 2);
        let b = DMatrix::from_fn(3, 2, |i, j| (i * 7 + j) as f64 - 2.5);
        assert_eq!(trace_inner(Covariate::Dense(&z), &b).unwrap(), 0.0);
    }

    #[test]
    fn trace_inner_shape_error_names_both_shapes() {
        let a = DMatrix::zeros(2, 3);
        let b = DMatrix::zeros(3, 2);
        let err = trace_inner(Covariate::Dense(&a), &b).unwrap_err();
        let msg = alloc::format!("{err}");
        assert!(msg.contains("2x3") && msg.contains("3x2"), "{msg}");
    }

    #[test]
    fn well_formed_regression_validates() {
        assert!(small_regression().validated().is_ok());
    }

    #[test]
    fn short_response_vector_rejected() {
        let mut p = small_regression();
        p.y = DVector::zeros(9);
        assert!(matches!(p.validate(), Err(Error::Dimension { .. })));
    }

    #[test]
    fn theta_and_outlier_set_must_agree() {
        let mut p = small_regression();
        let mut theta = DVector::zeros(10);
        theta[4] = 1.0;
        p.theta_true = Some(theta);
        p.outlier_index_set = Some(vec![2]);
        match p.validate() {
            Err(Error::Inconsistent { index, .. }) => assert_eq!(index, 2),
            other => panic!("expected consistency error, got {other:?}"),
        }
        p.outlier_index_set = Some(vec![4]);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn non_finite_entry_reported_with_index() {
        let mut p = small_regression();
        p.x[(3, 1)] = f64::NAN;
        match p.validate() {
            Err(Error::NonFinite { field, index }) => {
                assert_eq!(field, "X");
                assert_eq!(index, 3 + 10);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mask_cell_out_of_range_rejected() {
        let design = TraceDesign::Mask(vec![
            MaskEntry { row: 0, col: 0, sign: Sign::Plus },
            MaskEntry { row: 4, col: 0, sign: Sign::Plus },
        ]);
        let p = TraceProblem::new(DVector::zeros(2), design, 4, 4);
        match p.validate() {
            Err(Error::Inconsistent { field, index, .. }) => {
                assert_eq!(field, "mask");
                assert_eq!(index, 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn forward_and_adjoint_agree_between_encodings() {
        let entries = vec![
            MaskEntry { row: 0, col: 2, sign: Sign::Plus },
            MaskEntry { row: 1, col: 1, sign: Sign::Minus },
            MaskEntry { row: 0, col: 2, sign: Sign::Minus },
        ];
        let p = TraceProblem::new(DVector::zeros(3), TraceDesign::Mask(entries), 2, 3);
        let dense = p.densified();
        let b = DMatrix::from_fn(2, 3, |i, j| 0.3 * i as f64 - 0.7 * j as f64 + 0.1);
        assert_eq!(p.forward(&b), dense.forward(&b));
        let w = DVector::from_vec(vec![0.5, -1.5, 2.0]);
        assert_eq!(p.adjoint(&w), dense.adjoint(&w));
        let a = p.design_matrix();
        let via_matrix = &a * crate::linalg::vec_of(&b);
        assert!((via_matrix - p.forward(&b)).amax() < 1e-15);
    }

    #[test]
    fn tuning_params_positive() {
        assert!(TuningParams::new(0.0, 1.0).is_err());
        assert!(TuningParams::new(1.0, -1.0).is_err());
        assert!(TuningParams::new(1.0, 1.0).unwrap().with_radius(0.0).is_err());
        let tp = TuningParams::new(0.5, 1.0).unwrap();
        assert!((tp.huber_scale(16) - 2.0).abs() < 1e-15);
    }
}
