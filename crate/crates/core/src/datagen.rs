//! Synthetic designs, noise, ground truths and adversaries.
//!
//! Every generator is a pure function of its inputs and a `u64` seed; the
//! random stream is ChaCha8. Covariates are drawn first, then the noise vector,
//! then the adversary's choices from its own seed, so changing the adversary
//! never changes the clean part of a problem.
//!
//! Designs and noise are independent and the noise is symmetric, so
//! `E h(xi / (lambda_o sqrt(n))) x_i = 0` holds by construction. Dependent
//! designs are not generated.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT, Weibull};

use crate::diagnostics::spikiness;
use crate::error::{shape, Error, Result};
use crate::linalg;
use crate::math;
use crate::model::{MaskEntry, RegressionProblem, Sign, TraceDesign, TraceProblem};

pub type Rng64 = ChaCha8Rng;

/// Attempts before [`gen_low_rank`] gives up on meeting the spikiness cap.
pub const MAX_LOW_RANK_ATTEMPTS: usize = 10_000;

pub fn rng_from_seed(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Child seed for trial `index` of a run seeded with `base`.
///
/// `splitmix64(base + (index + 1) * 0x9E3779B97F4A7C15)`: distinct indices give
/// well-separated streams and the map is stable across platforms.
pub fn split_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy)]
pub enum NoiseKind {
    Gaussian,
    /// Student t with `df` degrees of freedom, scaled by `sigma`.
    StudentT { df: f64 },
    /// `sigma * sign * W` with `W ~ Weibull(shape = order, scale = 1)`.
    WeibullSymmetric { order: f64 },
    /// User-supplied sampler returning unit-scale draws, multiplied by `sigma`.
    Custom(fn(&mut Rng64) -> f64),
}

#[derive(Debug, Clone, Copy)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub sigma: f64,
}

impl NoiseSpec {
    pub fn gaussian(sigma: f64) -> Self {
        NoiseSpec { kind: NoiseKind::Gaussian, sigma }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::param("sigma", alloc::format!("noise scale must be positive, got {}", self.sigma)));
        }
        match self.kind {
            NoiseKind::StudentT { df } if !(df > 2.0 && df.is_finite()) => Err(Error::param(
                "df",
                alloc::format!("student t needs df > 2 for a finite second moment, got {df}"),
            )),
            NoiseKind::WeibullSymmetric { order } if !(order > 0.0 && order <= 2.0) => Err(Error::param(
                "order",
                alloc::format!("subWeibull order must lie in (0, 2], got {order}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn sample(&self, rng: &mut Rng64) -> f64 {
        let unit = match self.kind {
            NoiseKind::Gaussian => StandardNormal.sample(rng),
            NoiseKind::StudentT { df } => StudentT::new(df).map(|t| t.sample(rng)).unwrap_or(f64::NAN),
            NoiseKind::WeibullSymmetric { order } => {
                let w: f64 = Weibull::new(1.0, order).map(|w| w.sample(rng)).unwrap_or(f64::NAN);
                if rng.random::<bool>() {
                    w
                } else {
                    -w
                }
            }
            NoiseKind::Custom(f) => f(rng),
        };
        self.sigma * unit
    }

    /// `E|xi|^p`, when it exists and has a closed form.
    pub fn abs_moment(&self, p: f64) -> Option<f64> {
        let s = math::powf(self.sigma, p);
        match self.kind {
            NoiseKind::Gaussian => {
                Some(s * math::powf(2.0, p / 2.0) * math::gamma((p + 1.0) / 2.0) / math::sqrt(core::f64::consts::PI))
            }
            NoiseKind::StudentT { df } if p < df => Some(
                s * math::powf(df, p / 2.0) * math::gamma((p + 1.0) / 2.0) * math::gamma((df - p) / 2.0)
                    / (math::sqrt(core::f64::consts::PI) * math::gamma(df / 2.0)),
            ),
            NoiseKind::WeibullSymmetric { order } => Some(s * math::gamma(1.0 + p / order)),
            _ => None,
        }
    }

    /// `sigma_xi`-style summaries: `E|xi|`.
    pub fn first_abs_moment(&self) -> Option<f64> {
        self.abs_moment(1.0)
    }

    /// `(E xi^2)^(1/2)`.
    pub fn second_moment_root(&self) -> Option<f64> {
        self.abs_moment(2.0).map(math::sqrt)
    }

    /// `(E|xi|^alpha)^(1/alpha)`.
    pub fn alpha_moment_root(&self, alpha: f64) -> Option<f64> {
        self.abs_moment(alpha).map(|m| math::powf(m, 1.0 / alpha))
    }

    /// The subWeibull norm `inf { eta : E exp(|xi|^alpha / eta^alpha) <= 2 }` for the
    /// kinds where it is known in closed form.
    pub fn psi_norm(&self, alpha: f64) -> Option<f64> {
        match self.kind {
            // |xi|^k / sigma^k ~ Exp(1), so E exp(c Exp(1)) = 1/(1-c) <= 2 iff c <= 1/2
            NoiseKind::WeibullSymmetric { order } if order == alpha => {
                Some(math::powf(2.0, 1.0 / order) * self.sigma)
            }
            // E exp(xi^2 / eta^2) = (1 - 2 sigma^2 / eta^2)^(-1/2) <= 2 iff eta^2 >= 8 sigma^2 / 3
            NoiseKind::Gaussian if alpha == 2.0 => Some(self.sigma * math::sqrt(8.0 / 3.0)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Adversary {
    None,
    /// Uniformly random positions; `theta_i = magnitude * sgn(<x_i, truth>)`,
    /// pushing each corrupted response further in the direction of its signal.
    RandomLarge { magnitude: f64 },
    /// Uniformly random positions; the whole clean response is negated.
    SignFlip,
    /// Positions of the `o` largest `|xi_i|`; `theta_i = magnitude * sgn(xi_i)`.
    AdaptiveResidual { magnitude: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContaminationSpec {
    pub o: usize,
    pub strategy: Adversary,
    pub seed: u64,
}

impl ContaminationSpec {
    pub fn none() -> Self {
        ContaminationSpec {
            o: 0,
            strategy: Adversary::None,
            seed: 0,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.o > n {
            return Err(Error::param("o", alloc::format!("outlier count {} exceeds n = {n}", self.o)));
        }
        match self.strategy {
            Adversary::RandomLarge { magnitude } | Adversary::AdaptiveResidual { magnitude }
                if !(magnitude > 0.0 && magnitude.is_finite()) =>
            {
                Err(Error::param("magnitude", alloc::format!("must be positive and finite, got {magnitude}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CovariateKind {
    /// `x = Sigma^(1/2) z` with standard Gaussian `z`; identity when `covariance` is `None`.
    /// For dense trace designs the covariance acts on `vec(X_i)`.
    Gaussian { covariance: Option<DMatrix<f64>> },
    /// Independent `+-1` entries.
    Rademacher,
    /// Completion masks: uniform cell, uniform random sign.
    MaskUniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovariateSpec {
    pub kind: CovariateKind,
}

impl CovariateSpec {
    pub fn gaussian() -> Self {
        CovariateSpec {
            kind: CovariateKind::Gaussian { covariance: None },
        }
    }

    pub fn mask() -> Self {
        CovariateSpec {
            kind: CovariateKind::MaskUniform,
        }
    }

    /// `rho`: square root of the largest diagonal entry of the covariance.
    /// `None` for mask designs, whose covariance is implicit.
    pub fn rho(&self) -> Option<f64> {
        match &self.kind {
            CovariateKind::Gaussian { covariance: Some(s) } => Some(math::sqrt(s.diagonal().max())),
            CovariateKind::Gaussian { covariance: None } | CovariateKind::Rademacher => Some(1.0),
            CovariateKind::MaskUniform => None,
        }
    }

    /// subGaussian constant recorded as metadata (1 for both vector designs).
    pub fn subgaussian_l(&self) -> Option<f64> {
        match self.kind {
            CovariateKind::MaskUniform => None,
            _ => Some(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Truth {
    Vector(DVector<f64>),
    Matrix(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratedProblem {
    Regression(RegressionProblem),
    Trace(TraceProblem),
}

impl GeneratedProblem {
    pub fn into_regression(self) -> Option<RegressionProblem> {
        match self {
            GeneratedProblem::Regression(p) => Some(p),
            GeneratedProblem::Trace(_) => None,
        }
    }

    pub fn into_trace(self) -> Option<TraceProblem> {
        match self {
            GeneratedProblem::Trace(p) => Some(p),
            GeneratedProblem::Regression(_) => None,
        }
    }
}

/// `s` nonzero entries at uniformly drawn positions, each `+-magnitude`.
pub fn gen_sparse_beta(d: usize, s: usize, magnitude: f64, seed: u64) -> Result<DVector<f64>> {
    if s > d {
        return Err(Error::param("s", alloc::format!("sparsity {s} exceeds dimension {d}")));
    }
    if !magnitude.is_finite() {
        return Err(Error::param("magnitude", "must be finite"));
    }
    let mut rng = rng_from_seed(seed);
    let mut beta = DVector::zeros(d);
    for j in index::sample(&mut rng, d, s).into_iter() {
        beta[j] = if rng.random::<bool>() { magnitude } else { -magnitude };
    }
    Ok(beta)
}

/// Rank-`r` matrix `A1 A2^T` with Gaussian factors, scaled to unit Frobenius norm
/// and redrawn until its spikiness is at most `spikiness_cap`.
pub fn gen_low_rank(d1: usize, d2: usize, r: usize, spikiness_cap: f64, seed: u64) -> Result<DMatrix<f64>> {
    if r == 0 || r > d1.min(d2) {
        return Err(Error::param("r", alloc::format!("rank {r} must lie in [1, {}]", d1.min(d2))));
    }
    if !(spikiness_cap >= 1.0) {
        return Err(Error::param(
            "spikiness_cap",
            alloc::format!("spikiness is always >= 1, cap {spikiness_cap} is unreachable"),
        ));
    }
    let mut rng = rng_from_seed(seed);
    for _ in 0..MAX_LOW_RANK_ATTEMPTS {
        let a1: DMatrix<f64> = DMatrix::from_fn(d1, r, |_, _| StandardNormal.sample(&mut rng));
        let a2: DMatrix<f64> = DMatrix::from_fn(d2, r, |_, _| StandardNormal.sample(&mut rng));
        let b = &a1 * a2.transpose();
        let norm = b.norm();
        if norm == 0.0 {
            continue;
        }
        let b = b / norm;
        if spikiness(&b)? <= spikiness_cap {
            return Ok(b);
        }
    }
    Err(Error::param(
        "spikiness_cap",
        alloc::format!("no rank-{r} {} matrix under cap {spikiness_cap} in {MAX_LOW_RANK_ATTEMPTS} draws", shape(d1, d2)),
    ))
}

/// Generates `y_i = <x_i, truth> + xi_i + sqrt(n) theta*_i`.
///
/// A vector truth with a Gaussian or Rademacher design gives a regression
/// problem; a matrix truth gives a trace problem (dense or mask design).
pub fn gen_problem(
    cov: &CovariateSpec,
    noise: &NoiseSpec,
    truth: &Truth,
    n: usize,
    contamination: &ContaminationSpec,
    seed: u64,
) -> Result<GeneratedProblem> {
    if n == 0 {
        return Err(Error::param("n", "need at least one observation"));
    }
    noise.validate()?;
    contamination.validate(n)?;
    let mut rng = rng_from_seed(seed);

    match truth {
        Truth::Vector(beta) => {
            let x = draw_vector_design(cov, n, beta.len(), &mut rng)?;
            let signal = &x * beta;
            let xi = DVector::from_fn(n, |_, _| noise.sample(&mut rng));
            let (y, theta, set) = contaminate(&signal, &xi, contamination)?;
            Ok(GeneratedProblem::Regression(RegressionProblem {
                y,
                x,
                beta_true: Some(beta.clone()),
                theta_true: Some(theta),
                outlier_index_set: Some(set),
            }))
        }
        Truth::Matrix(b) => {
            let (d1, d2) = (b.nrows(), b.ncols());
            let design = draw_trace_design(cov, n, d1, d2, &mut rng)?;
            let mut p = TraceProblem::new(DVector::zeros(n), design, d1, d2);
            let signal = p.forward(b);
            let xi = DVector::from_fn(n, |_, _| noise.sample(&mut rng));
            let (y, theta, set) = contaminate(&signal, &xi, contamination)?;
            p.y = y;
            p.b_true = Some(b.clone());
            p.theta_true = Some(theta);
            p.outlier_index_set = Some(set);
            Ok(GeneratedProblem::Trace(p))
        }
    }
}

fn draw_vector_design(cov: &CovariateSpec, n: usize, d: usize, rng: &mut Rng64) -> Result<DMatrix<f64>> {
    match &cov.kind {
        CovariateKind::Gaussian { covariance } => {
            let z = DMatrix::from_fn(n, d, |_, _| StandardNormal.sample(rng));
            match covariance {
                None => Ok(z),
                Some(s) => {
                    if (s.nrows(), s.ncols()) != (d, d) {
                        return Err(Error::dim("covariance", shape(d, d), shape(s.nrows(), s.ncols())));
                    }
                    // rows x_i^T = z_i^T Sigma^(1/2)
                    Ok(z * linalg::sym_sqrt(s)?)
                }
            }
        }
        CovariateKind::Rademacher => Ok(DMatrix::from_fn(n, d, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 })),
        CovariateKind::MaskUniform => Err(Error::param("covariates", "mask designs need a matrix truth")),
    }
}

fn draw_trace_design(cov: &CovariateSpec, n: usize, d1: usize, d2: usize, rng: &mut Rng64) -> Result<TraceDesign> {
    let p = d1 * d2;
    match &cov.kind {
        CovariateKind::MaskUniform => Ok(TraceDesign::Mask(
            (0..n)
                .map(|_| MaskEntry {
                    row: rng.random_range(0..d1),
                    col: rng.random_range(0..d2),
                    sign: if rng.random::<bool>() { Sign::Plus } else { Sign::Minus },
                })
                .collect(),
        )),
        CovariateKind::Gaussian { covariance } => {
            let root = match covariance {
                None => None,
                Some(s) if (s.nrows(), s.ncols()) != (p, p) => {
                    return Err(Error::dim("covariance of vec(X)", shape(p, p), shape(s.nrows(), s.ncols())))
                }
                Some(s) => Some(linalg::sym_sqrt(s)?),
            };
            let mats = (0..n)
                .map(|_| {
                    let z = DVector::from_fn(p, |_, _| StandardNormal.sample(rng));
                    let v = match &root {
                        Some(r) => r * z,
                        None => z,
                    };
                    linalg::unvec(&v, d1, d2)
                })
                .collect();
            Ok(TraceDesign::Dense(mats))
        }
        CovariateKind::Rademacher => Ok(TraceDesign::Dense(
            (0..n)
                .map(|_| DMatrix::from_fn(d1, d2, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 }))
                .collect(),
        )),
    }
}

fn sign_or_plus(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Returns `(y, theta*, outlier_index_set)`.
fn contaminate(
    signal: &DVector<f64>,
    xi: &DVector<f64>,
    spec: &ContaminationSpec,
) -> Result<(DVector<f64>, DVector<f64>, Vec<usize>)> {
    let n = signal.len();
    let root_n = math::sqrt(n as f64);
    let mut theta = DVector::zeros(n);
    let mut rng = rng_from_seed(spec.seed);

    match spec.strategy {
        Adversary::None => {}
        Adversary::RandomLarge { magnitude } => {
            for i in index::sample(&mut rng, n, spec.o).into_iter() {
                theta[i] = magnitude * sign_or_plus(signal[i]);
            }
        }
        Adversary::SignFlip => {
            for i in index::sample(&mut rng, n, spec.o).into_iter() {
                theta[i] = -2.0 * (signal[i] + xi[i]) / root_n;
            }
        }
        Adversary::AdaptiveResidual { magnitude } => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| xi[b].abs().total_cmp(&xi[a].abs()).then(a.cmp(&b)));
            for &i in order.iter().take(spec.o) {
                theta[i] = magnitude * sign_or_plus(xi[i]);
            }
        }
    }

    let y = signal + xi + &theta * root_n;
    let set = (0..n).filter(|&i| theta[i] != 0.0).collect();
    Ok((y, theta, set))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_support_beta() {
        let b = gen_sparse_beta(5, 5, 1.0, 3).unwrap();
        assert!(b.iter().all(|v| v.abs() == 1.0));
        assert_eq!(gen_sparse_beta(5, 0, 1.0, 3).unwrap(), DVector::zeros(5));
        assert!(gen_sparse_beta(5, 6, 1.0, 3).is_err());
    }

    #[test]
    fn sparse_beta_is_deterministic() {
        let a = gen_sparse_beta(50, 5, 1.0, 7).unwrap();
        assert_eq!(a, gen_sparse_beta(50, 5, 1.0, 7).unwrap());
        assert_eq!(a.iter().filter(|v| **v != 0.0).count(), 5);
        assert_ne!(a, gen_sparse_beta(50, 5, 1.0, 8).unwrap());
    }

    #[test]
    fn low_rank_unit_norm_and_cap() {
        let b = gen_low_rank(6, 4, 4, f64::INFINITY, 2).unwrap();
        assert!((b.norm() - 1.0).abs() < 1e-12);
        assert!(gen_low_rank(6, 4, 5, 10.0, 2).is_err());
        assert!(gen_low_rank(6, 4, 2, 0.5, 2).is_err());
    }

    #[test]
    fn no_contamination_leaves_clean_model() {
        let beta = gen_sparse_beta(4, 2, 1.0, 1).unwrap();
        let p = gen_problem(
            &CovariateSpec::gaussian(),
            &NoiseSpec::gaussian(0.1),
            &Truth::Vector(beta.clone()),
            30,
            &ContaminationSpec::none(),
            9,
        )
        .unwrap()
        .into_regression()
        .unwrap();
        assert_eq!(p.theta_true.as_ref().unwrap(), &DVector::zeros(30));
        assert!(p.outlier_index_set.as_ref().unwrap().is_empty());
        // regenerate noise from the same stream to confirm y = X beta + xi
        let mut rng = rng_from_seed(9);
        let _: Vec<f64> = (0..30 * 4).map(|_| StandardNormal.sample(&mut rng)).collect();
        let xi = DVector::from_fn(30, |_, _| NoiseSpec::gaussian(0.1).sample(&mut rng));
        assert!((&p.y - (&p.x * &beta + xi)).amax() < 1e-15);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn sign_flip_on_every_row() {
        let beta = DVector::from_vec(alloc::vec![1.0, -1.0]);
        let spec = ContaminationSpec {
            o: 20,
            strategy: Adversary::SignFlip,
            seed: 4,
        };
        let clean = gen_problem(&CovariateSpec::gaussian(), &NoiseSpec::gaussian(0.1), &Truth::Vector(beta.clone()), 20, &ContaminationSpec::none(), 5)
            .unwrap()
            .into_regression()
            .unwrap();
        let dirty = gen_problem(&CovariateSpec::gaussian(), &NoiseSpec::gaussian(0.1), &Truth::Vector(beta), 20, &spec, 5)
            .unwrap()
            .into_regression()
            .unwrap();
        assert_eq!(dirty.o(), Some(20));
        assert!((&dirty.y + &clean.y).amax() < 1e-12);
        assert!(dirty.validate().is_ok());
    }

    #[test]
    fn adaptive_adversary_hits_largest_noise() {
        let beta = DVector::from_vec(alloc::vec![0.5; 3]);
        let spec = ContaminationSpec {
            o: 5,
            strategy: Adversary::AdaptiveResidual { magnitude: 3.0 },
            seed: 0,
        };
        let p = gen_problem(&CovariateSpec::gaussian(), &NoiseSpec::gaussian(1.0), &Truth::Vector(beta.clone()), 40, &spec, 11)
            .unwrap()
            .into_regression()
            .unwrap();
        let xi = &p.y - &p.x * &beta - p.theta_true.as_ref().unwrap() * math::sqrt(40.0);
        let mut order: Vec<usize> = (0..40).collect();
        order.sort_by(|&a, &b| xi[b].abs().total_cmp(&xi[a].abs()));
        let mut top: Vec<usize> = order[..5].to_vec();
        top.sort_unstable();
        assert_eq!(p.outlier_index_set.as_ref().unwrap(), &top);
    }

    #[test]
    fn too_many_outliers_rejected() {
        let spec = ContaminationSpec {
            o: 11,
            strategy: Adversary::SignFlip,
            seed: 0,
        };
        let r = gen_problem(&CovariateSpec::gaussian(), &NoiseSpec::gaussian(1.0), &Truth::Vector(DVector::zeros(2)), 10, &spec, 0);
        assert!(r.is_err());
    }

    #[test]
    fn noise_parameter_checks() {
        assert!(NoiseSpec { kind: NoiseKind::StudentT { df: 2.0 }, sigma: 1.0 }.validate().is_err());
        assert!(NoiseSpec { kind: NoiseKind::WeibullSymmetric { order: 2.5 }, sigma: 1.0 }.validate().is_err());
        assert!(NoiseSpec::gaussian(0.0).validate().is_err());
    }

    #[test]
    fn seed_splitting_is_stable_and_distinct() {
        assert_eq!(split_seed(42, 3), split_seed(42, 3));
        let seeds: Vec<u64> = (0..100).map(|i| split_seed(42, i)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 100);
    }
}
