//! Serializable descriptions of problem kinds, noise, adversaries and tuning,
//! shared by bundle metadata, sweep specs and the command line.

use std::fmt;

use hubreg_core::datagen::{Adversary, CovariateKind, CovariateSpec, NoiseKind, NoiseSpec};
use hubreg_core::diagnostics::{
    tuning_completion, tuning_lasso, tuning_matrix_cs, CompletionVariant, DiagnosticsReport, TheoremConstants,
    TheoremInputs,
};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Lasso,
    MatrixCs,
    Completion,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::Lasso => "lasso",
            ProblemKind::MatrixCs => "matrix_cs",
            ProblemKind::Completion => "completion",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseConfig {
    Gaussian { sigma: f64 },
    StudentT { sigma: f64, df: f64 },
    Weibull { sigma: f64, order: f64 },
}

impl NoiseConfig {
    pub fn spec(&self) -> NoiseSpec {
        match *self {
            NoiseConfig::Gaussian { sigma } => NoiseSpec::gaussian(sigma),
            NoiseConfig::StudentT { sigma, df } => NoiseSpec {
                kind: NoiseKind::StudentT { df },
                sigma,
            },
            NoiseConfig::Weibull { sigma, order } => NoiseSpec {
                kind: NoiseKind::WeibullSymmetric { order },
                sigma,
            },
        }
    }
}

impl fmt::Display for NoiseConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseConfig::Gaussian { sigma } => write!(f, "gaussian:sigma={sigma}"),
            NoiseConfig::StudentT { sigma, df } => write!(f, "student_t:sigma={sigma}:df={df}"),
            NoiseConfig::Weibull { sigma, order } => write!(f, "weibull:sigma={sigma}:order={order}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdversaryConfig {
    None,
    RandomLarge { magnitude: f64 },
    SignFlip,
    AdaptiveResidual { magnitude: f64 },
}

impl AdversaryConfig {
    pub fn adversary(&self) -> Adversary {
        match *self {
            AdversaryConfig::None => Adversary::None,
            AdversaryConfig::RandomLarge { magnitude } => Adversary::RandomLarge { magnitude },
            AdversaryConfig::SignFlip => Adversary::SignFlip,
            AdversaryConfig::AdaptiveResidual { magnitude } => Adversary::AdaptiveResidual { magnitude },
        }
    }
}

impl fmt::Display for AdversaryConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversaryConfig::None => f.write_str("none"),
            AdversaryConfig::RandomLarge { magnitude } => write!(f, "random_large:magnitude={magnitude}"),
            AdversaryConfig::SignFlip => f.write_str("sign_flip"),
            AdversaryConfig::AdaptiveResidual { magnitude } => write!(f, "adaptive_residual:magnitude={magnitude}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DesignConfig {
    #[default]
    Gaussian,
    Rademacher,
}

impl DesignConfig {
    pub fn spec(self, kind: ProblemKind) -> CovariateSpec {
        match (kind, self) {
            (ProblemKind::Completion, _) => CovariateSpec::mask(),
            (_, DesignConfig::Gaussian) => CovariateSpec::gaussian(),
            (_, DesignConfig::Rademacher) => CovariateSpec {
                kind: CovariateKind::Rademacher,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum VariantConfig {
    HeavyTailed,
    #[default]
    Subweibull,
}

impl VariantConfig {
    pub fn variant(self) -> CompletionVariant {
        match self {
            VariantConfig::HeavyTailed => CompletionVariant::HeavyTailed,
            VariantConfig::Subweibull => CompletionVariant::SubWeibull,
        }
    }
}

/// Constants and confidence level fed to the tuning rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoryConfig {
    pub delta: f64,
    pub c0: f64,
    pub kappa: f64,
    pub alpha_star: f64,
    pub alpha_order: f64,
    pub variant: VariantConfig,
    pub c_lasso: f64,
    pub c_lasso_prime: f64,
    pub c_mcs: f64,
    pub c_mcs_prime: f64,
    pub c_mc1: f64,
    pub c_mc1_prime: f64,
    pub c_mc2: f64,
    pub c_mc2_prime: f64,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        let c = TheoremConstants::default();
        TheoryConfig {
            delta: 0.1,
            c0: 3.0,
            kappa: 1.0,
            alpha_star: 3.0,
            alpha_order: 2.0,
            variant: VariantConfig::default(),
            c_lasso: c.c_lasso,
            c_lasso_prime: c.c_lasso_prime,
            c_mcs: c.c_mcs,
            c_mcs_prime: c.c_mcs_prime,
            c_mc1: c.c_mc1,
            c_mc1_prime: c.c_mc1_prime,
            c_mc2: c.c_mc2,
            c_mc2_prime: c.c_mc2_prime,
        }
    }
}

impl TheoryConfig {
    pub fn constants(&self) -> TheoremConstants {
        TheoremConstants {
            c_mcs: self.c_mcs,
            c_mcs_prime: self.c_mcs_prime,
            c_lasso: self.c_lasso,
            c_lasso_prime: self.c_lasso_prime,
            c_mc1: self.c_mc1,
            c_mc1_prime: self.c_mc1_prime,
            c_mc2: self.c_mc2,
            c_mc2_prime: self.c_mc2_prime,
        }
    }
}

/// Problem facts the tuning rules need beyond the constants.
#[derive(Debug, Clone)]
pub struct ProblemFacts {
    pub kind: ProblemKind,
    pub n: usize,
    pub d: usize,
    pub d1: usize,
    pub d2: usize,
    pub sparsity: usize,
    pub o: usize,
    pub noise: NoiseSpec,
    pub l: f64,
    pub rho: f64,
}

/// Evaluates the tuning rule matching `facts.kind`.
///
/// The noise scale passed on is `E|xi|` for lasso and compressed sensing, the
/// `alpha`-th moment root for heavy-tailed completion and the subWeibull norm
/// for subWeibull completion.
pub fn theorem_report(facts: &ProblemFacts, theory: &TheoryConfig) -> Result<DiagnosticsReport> {
    let noise = &facts.noise;
    noise.validate()?;
    let missing = |what: &str| AppError::config(format!("noise {:?} has no closed-form {what}", noise.kind));
    let alpha = theory.alpha_order;
    let sigma = match (facts.kind, theory.variant) {
        (ProblemKind::Completion, VariantConfig::HeavyTailed) => {
            noise.alpha_moment_root(alpha).ok_or_else(|| missing("alpha-th moment"))?
        }
        (ProblemKind::Completion, VariantConfig::Subweibull) => {
            noise.psi_norm(alpha).ok_or_else(|| missing("subWeibull norm of the requested order"))?
        }
        _ => noise.first_abs_moment().ok_or_else(|| missing("first absolute moment"))?,
    };
    let inp = TheoremInputs {
        n: facts.n,
        d: facts.d,
        d1: facts.d1,
        d2: facts.d2,
        sparsity: facts.sparsity,
        o: facts.o,
        delta: theory.delta,
        sigma,
        sigma_xi: noise.second_moment_root().unwrap_or(sigma),
        l: facts.l,
        kappa: theory.kappa,
        c0: theory.c0,
        rho: facts.rho,
        alpha_star: theory.alpha_star,
        alpha_order: alpha,
        constants: theory.constants(),
    };
    let rep = match facts.kind {
        ProblemKind::Lasso => tuning_lasso(&inp)?,
        ProblemKind::MatrixCs => tuning_matrix_cs(&inp)?,
        ProblemKind::Completion => tuning_completion(&inp, theory.variant.variant())?,
    };
    Ok(rep)
}
