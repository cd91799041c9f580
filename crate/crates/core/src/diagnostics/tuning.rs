//! Tuning levels and predicted error radii from the estimation guarantees.
//!
//! The guarantees fix `lambda_o`, `lambda_*` and the error radius only up to
//! unspecified numerical constants. Those constants default to 1 and are
//! configurable, so the radii are meaningful for scaling comparisons only.
//!
//! With `o = 0` the outlier term `(o/n) sqrt(log(n/o))` is taken as its limit, 0.

use crate::error::{Error, Result};
use crate::math::{ln, powf, sqrt};
use crate::model::TuningParams;

/// Numerical constants left unspecified by the guarantees; all default to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremConstants {
    pub c_mcs: f64,
    pub c_mcs_prime: f64,
    pub c_lasso: f64,
    pub c_lasso_prime: f64,
    pub c_mc1: f64,
    pub c_mc1_prime: f64,
    pub c_mc2: f64,
    pub c_mc2_prime: f64,
}

impl Default for TheoremConstants {
    fn default() -> Self {
        TheoremConstants {
            c_mcs: 1.0,
            c_mcs_prime: 1.0,
            c_lasso: 1.0,
            c_lasso_prime: 1.0,
            c_mc1: 1.0,
            c_mc1_prime: 1.0,
            c_mc2: 1.0,
            c_mc2_prime: 1.0,
        }
    }
}

impl TheoremConstants {
    pub fn named(&self) -> [(&'static str, f64); 8] {
        [
            ("c_mcs", self.c_mcs),
            ("c_mcs_prime", self.c_mcs_prime),
            ("c_lasso", self.c_lasso),
            ("c_lasso_prime", self.c_lasso_prime),
            ("c_mc1", self.c_mc1),
            ("c_mc1_prime", self.c_mc1_prime),
            ("c_mc2", self.c_mc2),
            ("c_mc2_prime", self.c_mc2_prime),
        ]
    }
}

/// Everything the tuning rules read.
///
/// `sigma` is the noise scale of the relevant guarantee: the first absolute
/// moment `E|xi|` for lasso and matrix compressed sensing, `sigma_{xi,alpha}`
/// (alpha-th absolute moment root) for heavy-tailed completion, and the
/// subWeibull norm `sigma_{xi,psi_alpha}` for subWeibull completion.
/// `sigma_xi` is the root second moment, used only by completion.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremInputs {
    pub n: usize,
    /// Lasso dimension.
    pub d: usize,
    /// Matrix dimensions (compressed sensing and completion).
    pub d1: usize,
    pub d2: usize,
    /// `s` for lasso, `r` for the matrix problems.
    pub sparsity: usize,
    pub o: usize,
    pub delta: f64,
    pub sigma: f64,
    pub sigma_xi: f64,
    /// subGaussian constant `L`.
    pub l: f64,
    pub kappa: f64,
    pub c0: f64,
    pub rho: f64,
    pub alpha_star: f64,
    pub alpha_order: f64,
    pub constants: TheoremConstants,
}

impl Default for TheoremInputs {
    fn default() -> Self {
        TheoremInputs {
            n: 1,
            d: 1,
            d1: 1,
            d2: 1,
            sparsity: 1,
            o: 0,
            delta: 0.1,
            sigma: 1.0,
            sigma_xi: 1.0,
            l: 1.0,
            kappa: 1.0,
            c0: 3.0,
            rho: 1.0,
            alpha_star: 1.0,
            alpha_order: 2.0,
            constants: TheoremConstants::default(),
        }
    }
}

impl TheoremInputs {
    /// `c_kappa = (c0 + 1) / kappa`.
    pub fn c_kappa(&self) -> f64 {
        (self.c0 + 1.0) / self.kappa
    }

    fn check_common(&self, delta_max: f64) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("n", "must be positive"));
        }
        if self.sparsity == 0 {
            return Err(Error::param("sparsity", "s (or r) must be at least 1"));
        }
        if self.o > self.n {
            return Err(Error::param("o", alloc::format!("{} exceeds n = {}", self.o, self.n)));
        }
        if !(self.delta > 0.0 && self.delta < delta_max) {
            return Err(Error::param("delta", alloc::format!("must lie in (0, {delta_max}), got {}", self.delta)));
        }
        positive("sigma", self.sigma)?;
        positive("L", self.l)?;
        positive("kappa", self.kappa)?;
        positive("c0", self.c0)?;
        positive("rho", self.rho)?;
        for (name, v) in self.constants.named() {
            positive(name, v)?;
        }
        Ok(())
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, alloc::format!("must be positive and finite, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusKind {
    /// Bound on `||T_Sigma(B_hat - B*)||_F`.
    MatrixCs,
    /// Bound on `||Sigma^(1/2)(beta_hat - beta*)||_2`.
    Lasso,
    /// Bound on `||B_hat - B*||_F`, heavy-tailed noise.
    CompletionHeavyTailed,
    /// Bound on `||B_hat - B*||_F`, subWeibull noise.
    CompletionSubWeibull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompletionVariant {
    HeavyTailed,
    SubWeibull,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub kind: RadiusKind,
    pub lambda_o: f64,
    /// `lambda_o * sqrt(n)`.
    pub huber_scale: f64,
    pub lambda_star: f64,
    /// The three summands of `r_{lambda_*}`, in the order they are written.
    pub r_lambda_terms: [f64; 3],
    pub r_lambda: f64,
    pub predicted_radius: f64,
    /// `radius <= 1 / (4 sqrt(3) L^2)`; only defined for lasso and compressed sensing.
    pub radius_feasible: Option<bool>,
    /// `alpha* / d_mc` for completion.
    pub inf_ball_radius: Option<f64>,
}

impl DiagnosticsReport {
    pub fn tuning_params(&self) -> Result<TuningParams> {
        let tp = TuningParams::new(self.lambda_o, self.lambda_star)?;
        match self.inf_ball_radius {
            Some(r) => tp.with_radius(r),
            None => Ok(tp),
        }
    }
}

/// `(o/n) sqrt(log(n/o))`, zero at `o = 0`.
fn outlier_term(o: usize, n: usize) -> f64 {
    if o == 0 {
        return 0.0;
    }
    let frac = o as f64 / n as f64;
    frac * sqrt(ln(1.0 / frac))
}

fn radius_bound(l: f64) -> f64 {
    1.0 / (4.0 * sqrt(3.0) * l * l)
}

/// Shared shape of the lasso and compressed-sensing rules; `complexity` is the
/// dimension term (`rho sqrt(log(d/s)/n)` or `rho sqrt((d1+d2)/n)`).
fn subgaussian_rule(inp: &TheoremInputs, complexity: f64, c: f64, c_prime: f64, kind: RadiusKind) -> DiagnosticsReport {
    let n = inp.n as f64;
    let huber_scale = 72.0 * powf(inp.l, 4.0) * inp.sigma;
    let lambda_o = huber_scale / sqrt(n);
    let ck = inp.c_kappa();
    let root_k = sqrt(inp.sparsity as f64);
    let terms = [
        complexity,
        (1.0 + sqrt(ln(1.0 / inp.delta))) / (ck * root_k * sqrt(n)),
        outlier_term(inp.o, inp.n) / (ck * root_k),
    ];
    let r_lambda = terms[0] + terms[1] + terms[2];
    let lambda_star = c * huber_scale * inp.l * r_lambda;
    let radius = c_prime * huber_scale * inp.l * ck * root_k * r_lambda;
    DiagnosticsReport {
        kind,
        lambda_o,
        huber_scale,
        lambda_star,
        r_lambda_terms: terms,
        r_lambda,
        predicted_radius: radius,
        radius_feasible: Some(radius <= radius_bound(inp.l)),
        inf_ball_radius: None,
    }
}

/// Sparse regression rule: `lambda_o sqrt(n) = 72 L^4 sigma`,
/// `lambda_* = c_lasso lambda_o sqrt(n) L r`, radius `c'_lasso lambda_o sqrt(n) L c_kappa sqrt(s) r`.
pub fn tuning_lasso(inp: &TheoremInputs) -> Result<DiagnosticsReport> {
    inp.check_common(1.0 / 7.0)?;
    if inp.sparsity > inp.d {
        return Err(Error::param("s", alloc::format!("sparsity {} exceeds d = {}", inp.sparsity, inp.d)));
    }
    let n = inp.n as f64;
    let complexity = inp.rho * sqrt(ln(inp.d as f64 / inp.sparsity as f64) / n);
    Ok(subgaussian_rule(
        inp,
        complexity,
        inp.constants.c_lasso,
        inp.constants.c_lasso_prime,
        RadiusKind::Lasso,
    ))
}

/// Matrix compressed sensing rule; the dimension term is `rho sqrt((d1 + d2)/n)`.
pub fn tuning_matrix_cs(inp: &TheoremInputs) -> Result<DiagnosticsReport> {
    inp.check_common(1.0 / 7.0)?;
    if inp.d1 == 0 || inp.d2 == 0 || inp.sparsity > inp.d1.min(inp.d2) {
        return Err(Error::param("r", alloc::format!("rank {} invalid for {}x{}", inp.sparsity, inp.d1, inp.d2)));
    }
    let n = inp.n as f64;
    let complexity = inp.rho * sqrt((inp.d1 + inp.d2) as f64 / n);
    Ok(subgaussian_rule(
        inp,
        complexity,
        inp.constants.c_mcs,
        inp.constants.c_mcs_prime,
        RadiusKind::MatrixCs,
    ))
}

/// Matrix completion rules for heavy-tailed (`alpha >= 2`) or subWeibull
/// (`alpha <= 2`) noise.
///
/// `lambda_o sqrt(n)` is set to its lower bound `2 sigma min{branch_o, branch_d}`;
/// with `o = 0` only the dimension branch applies.
pub fn tuning_completion(inp: &TheoremInputs, variant: CompletionVariant) -> Result<DiagnosticsReport> {
    inp.check_common(1.0)?;
    positive("sigma_xi", inp.sigma_xi)?;
    positive("alpha_star", inp.alpha_star)?;
    let alpha = inp.alpha_order;
    match variant {
        CompletionVariant::HeavyTailed if !(alpha >= 2.0 && alpha.is_finite()) => {
            return Err(Error::param("alpha", alloc::format!("heavy-tailed variant needs alpha >= 2, got {alpha}")))
        }
        CompletionVariant::SubWeibull if !(alpha > 0.0 && alpha <= 2.0) => {
            return Err(Error::param("alpha", alloc::format!("subWeibull variant needs 0 < alpha <= 2, got {alpha}")))
        }
        _ => {}
    }
    if inp.d1 == 0 || inp.d2 == 0 || inp.sparsity > inp.d1.min(inp.d2) {
        return Err(Error::param("r", alloc::format!("rank {} invalid for {}x{}", inp.sparsity, inp.d1, inp.d2)));
    }
    let n = inp.n as f64;
    let r = inp.sparsity as f64;
    let d_mc = sqrt((inp.d1 * inp.d2) as f64);
    if d_mc <= 1.0 {
        return Err(Error::param("d_mc", "completion rules need d1 * d2 > 1"));
    }
    let dim_ratio = n / (r * d_mc * ln(d_mc));
    let out_ratio = if inp.o == 0 { None } else { Some(n / inp.o as f64) };

    let (branch_o, branch_d) = match variant {
        CompletionVariant::HeavyTailed => (
            out_ratio.map(|x| powf(x, 1.0 / (alpha + 1.0))),
            powf(dim_ratio, 1.0 / alpha),
        ),
        CompletionVariant::SubWeibull => {
            let root_log = |x: f64| {
                let l = ln(x);
                if l > 0.0 {
                    powf(l, 1.0 / alpha)
                } else {
                    0.0
                }
            };
            (out_ratio.map(root_log), root_log(dim_ratio))
        }
    };
    let branch = match branch_o {
        Some(b) => b.min(branch_d),
        None => branch_d,
    };
    let huber_scale = 2.0 * inp.sigma * branch;
    if !(huber_scale > 0.0) {
        return Err(Error::param(
            "n",
            alloc::format!("lambda_o lower bound is zero: n = {} is too small for this regime", inp.n),
        ));
    }
    let lambda_o = huber_scale / sqrt(n);

    let log_term = ln(d_mc) + ln(1.0 / inp.delta);
    let frac = inp.o as f64 / n;
    let terms = [
        inp.sigma_xi * sqrt(r * d_mc * log_term / n),
        lambda_o * sqrt(r) * d_mc * log_term / sqrt(n),
        sqrt(huber_scale * frac),
    ];
    let r_lambda = terms[0] + terms[1] + terms[2];
    let (c, c_prime, outlier_radius, kind) = match variant {
        CompletionVariant::HeavyTailed => (
            inp.constants.c_mc1,
            inp.constants.c_mc1_prime,
            powf(frac, alpha / (2.0 * (1.0 + alpha))),
            RadiusKind::CompletionHeavyTailed,
        ),
        CompletionVariant::SubWeibull => (
            inp.constants.c_mc2,
            inp.constants.c_mc2_prime,
            sqrt(frac),
            RadiusKind::CompletionSubWeibull,
        ),
    };
    let a = inp.alpha_star;
    let radius = c_prime
        * a
        * (r_lambda + a * sqrt(r * d_mc * log_term / n) + sqrt(r) * d_mc * ln(d_mc) / n + a * outlier_radius);
    Ok(DiagnosticsReport {
        kind,
        lambda_o,
        huber_scale,
        lambda_star: c * r_lambda / sqrt(r),
        r_lambda_terms: terms,
        r_lambda,
        predicted_radius: radius,
        radius_feasible: None,
        inf_ball_radius: Some(a / d_mc),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn huber_scale_anchor() {
        let inp = TheoremInputs {
            n: 10_000,
            d: 100,
            sparsity: 5,
            ..TheoremInputs::default()
        };
        let rep = tuning_lasso(&inp).unwrap();
        assert!((rep.huber_scale - 72.0).abs() < 1e-12);
        assert!((rep.lambda_o - 0.72).abs() < 1e-12);
    }

    #[test]
    fn delta_range_enforced() {
        let mut inp = TheoremInputs {
            n: 100,
            d: 10,
            ..TheoremInputs::default()
        };
        inp.delta = 1.0 / 7.0;
        assert!(tuning_lasso(&inp).is_err());
        inp.delta = 0.0;
        assert!(tuning_lasso(&inp).is_err());
        inp.delta = 0.5;
        inp.d1 = 4;
        inp.d2 = 4;
        assert!(tuning_completion(&inp, CompletionVariant::SubWeibull).is_ok());
    }

    #[test]
    fn completion_alpha_ranges() {
        let mut inp = TheoremInputs {
            n: 2000,
            d1: 20,
            d2: 20,
            sparsity: 2,
            ..TheoremInputs::default()
        };
        inp.alpha_order = 1.5;
        assert!(tuning_completion(&inp, CompletionVariant::HeavyTailed).is_err());
        assert!(tuning_completion(&inp, CompletionVariant::SubWeibull).is_ok());
        inp.alpha_order = 3.0;
        assert!(tuning_completion(&inp, CompletionVariant::SubWeibull).is_err());
        assert!(tuning_completion(&inp, CompletionVariant::HeavyTailed).is_ok());
    }

    #[test]
    fn tiny_sample_rejected_for_subweibull() {
        let inp = TheoremInputs {
            n: 10,
            d1: 20,
            d2: 20,
            sparsity: 2,
            ..TheoremInputs::default()
        };
        assert!(tuning_completion(&inp, CompletionVariant::SubWeibull).is_err());
    }
}
