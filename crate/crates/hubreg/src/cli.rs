//! Command line: `generate`, `solve`, `tune`, `diagnose`, `sweep` and `slope`.
//!
//! Summary lines on stdout are `key=value` pairs. Exit codes: 0 success,
//! 2 usage or configuration error, 3 I/O error, 4 internal failure.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hubreg_core::datagen::{gen_low_rank, gen_problem, gen_sparse_beta, split_seed, ContaminationSpec, GeneratedProblem, Truth};
use hubreg_core::diagnostics::{empirical_mre, empirical_re, spikiness, MreConfig, ReConfig};
use hubreg_core::solvers::{solve_adversarial_lasso, solve_matrix_completion, solve_matrix_cs, SolverConfig};
use hubreg_core::{DMatrix, TuningParams};

use crate::bundle::{fmt_float, read_matrix, write_matrix, write_vector, Bundle, Meta, Problem};
use crate::config::{
    theorem_report, AdversaryConfig, DesignConfig, NoiseConfig, ProblemFacts, ProblemKind, TheoryConfig, VariantConfig,
};
use crate::error::{AppError, Result};
use crate::experiments::{fit_rate_slope, read_results, run_sweep, write_results, ErrorField, SweepSpec, XAxis};

#[derive(Debug, Parser)]
#[command(name = "hubreg", version, about = "Huber-loss penalized estimation under adversarial contamination")]
pub struct Cli {
    /// Print progress details to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic problem and write it as a CSV bundle.
    Generate(GenerateArgs),
    /// Fit the Huber estimator to a bundle and write the estimate.
    Solve(SolveArgs),
    /// Evaluate the tuning rules and predicted error radius.
    Tune(TuneArgs),
    /// Empirical RE/MRE constants or spikiness of a matrix.
    Diagnose(DiagnoseArgs),
    /// Run a parameter sweep from a TOML spec and write results CSV.
    Sweep(SweepArgs),
    /// Fit the log-log rate slope of a results CSV.
    Slope(SlopeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseKindArg {
    Gaussian,
    StudentT,
    Weibull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AdversaryArg {
    None,
    RandomLarge,
    SignFlip,
    AdaptiveResidual,
}

#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    /// Noise distribution.
    #[arg(long, value_enum, default_value = "gaussian")]
    pub noise: NoiseKindArg,
    /// Noise scale (standard deviation for Gaussian noise).
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    /// Degrees of freedom of Student-t noise.
    #[arg(long, default_value_t = 3.0)]
    pub df: f64,
    /// Order of symmetric Weibull noise.
    #[arg(long, default_value_t = 1.5)]
    pub order: f64,
}

impl NoiseArgs {
    fn config(&self) -> NoiseConfig {
        match self.noise {
            NoiseKindArg::Gaussian => NoiseConfig::Gaussian { sigma: self.sigma },
            NoiseKindArg::StudentT => NoiseConfig::StudentT {
                sigma: self.sigma,
                df: self.df,
            },
            NoiseKindArg::Weibull => NoiseConfig::Weibull {
                sigma: self.sigma,
                order: self.order,
            },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SizeArgs {
    /// Problem kind.
    #[arg(long, value_enum, default_value = "lasso")]
    pub kind: ProblemKind,
    /// Number of observations.
    #[arg(long)]
    pub n: usize,
    /// Lasso dimension.
    #[arg(long, default_value_t = 0)]
    pub d: usize,
    /// Matrix rows.
    #[arg(long, default_value_t = 0)]
    pub d1: usize,
    /// Matrix columns.
    #[arg(long, default_value_t = 0)]
    pub d2: usize,
    /// Sparsity `s` (lasso) or rank `r` (matrix problems).
    #[arg(long, default_value_t = 1)]
    pub sparsity: usize,
    /// Number of contaminated responses.
    #[arg(long, default_value_t = 0)]
    pub o: usize,
}

impl SizeArgs {
    fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(AppError::config("invalid parameter n: must be positive"));
        }
        match self.kind {
            ProblemKind::Lasso if self.d == 0 => Err(AppError::config("invalid parameter d: must be positive")),
            ProblemKind::MatrixCs | ProblemKind::Completion if self.d1 == 0 || self.d2 == 0 => {
                Err(AppError::config("invalid parameter d1/d2: both must be positive"))
            }
            _ => Ok(()),
        }
    }

    fn d_total(&self) -> usize {
        match self.kind {
            ProblemKind::Lasso => self.d,
            _ => self.d1 * self.d2,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub size: SizeArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Contamination strategy.
    #[arg(long, value_enum, default_value = "random-large")]
    pub adversary: AdversaryArg,
    /// Outlier magnitude for random-large and adaptive-residual.
    #[arg(long, default_value_t = 10.0)]
    pub magnitude: f64,
    /// Covariate design (ignored for completion, which uses masks).
    #[arg(long, value_enum, default_value = "gaussian")]
    pub design: DesignConfig,
    /// Magnitude of nonzero lasso coefficients.
    #[arg(long, default_value_t = 1.0)]
    pub beta_magnitude: f64,
    /// Spikiness cap for the low-rank truth.
    #[arg(long, default_value_t = 3.0)]
    pub spikiness_cap: f64,
    /// Seed for all randomness.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output bundle directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolveTuning {
    Theorem,
    Fixed,
}

#[derive(Debug, Clone, Args)]
pub struct TheoryArgs {
    /// Confidence parameter delta.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Cone constant c0.
    #[arg(long)]
    pub c0: Option<f64>,
    /// RE/MRE constant kappa.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Spikiness bound alpha* for completion.
    #[arg(long)]
    pub alpha_star: Option<f64>,
    /// Moment order (heavy-tailed) or subWeibull order.
    #[arg(long)]
    pub alpha_order: Option<f64>,
    /// Completion noise assumption.
    #[arg(long, value_enum)]
    pub variant: Option<VariantConfig>,
    /// TOML file with a full theory table, including the numerical constants.
    #[arg(long)]
    pub theory: Option<PathBuf>,
}

impl TheoryArgs {
    fn config(&self) -> Result<TheoryConfig> {
        let mut t = match &self.theory {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
                toml::from_str(&text).map_err(|e| AppError::format(path, e.to_string()))?
            }
            None => TheoryConfig::default(),
        };
        if let Some(v) = self.delta {
            t.delta = v;
        }
        if let Some(v) = self.c0 {
            t.c0 = v;
        }
        if let Some(v) = self.kappa {
            t.kappa = v;
        }
        if let Some(v) = self.alpha_star {
            t.alpha_star = v;
        }
        if let Some(v) = self.alpha_order {
            t.alpha_order = v;
        }
        if let Some(v) = self.variant {
            t.variant = v;
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Input bundle directory.
    #[arg(long)]
    pub bundle: PathBuf,
    /// Output CSV for the estimate.
    #[arg(long)]
    pub out: PathBuf,
    /// Where the levels come from. Theorem tuning needs sparsity, o and noise in the bundle meta.
    #[arg(long, value_enum, default_value = "theorem")]
    pub tuning: SolveTuning,
    /// Huber level lambda_o (fixed tuning).
    #[arg(long)]
    pub lambda_o: Option<f64>,
    /// Penalty level lambda_* (fixed tuning).
    #[arg(long)]
    pub lambda_star: Option<f64>,
    /// Infinity-ball radius for completion; defaults to alpha* / d_mc.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Iteration cap.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Relative objective-change tolerance.
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[command(flatten)]
    pub theory: TheoryArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub size: SizeArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// subGaussian constant L of the design.
    #[arg(long, default_value_t = 1.0)]
    pub l: f64,
    /// Square root of the largest covariance diagonal.
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[command(flatten)]
    pub theory: TheoryArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    /// Covariance matrix CSV; defaults to the identity of size --dim.
    #[arg(long)]
    pub sigma: Option<PathBuf>,
    /// Identity size when no --sigma is given.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Sparsity for RE, or rank for MRE.
    #[arg(long, default_value_t = 2)]
    pub sparsity: usize,
    /// Cone constant c0.
    #[arg(long, default_value_t = 3.0)]
    pub c0: f64,
    /// Compute the matrix constant for d1 x d2 directions instead of RE.
    #[arg(long, requires = "d2")]
    pub d1: Option<usize>,
    /// Columns of the matrix directions.
    #[arg(long, requires = "d1")]
    pub d2: Option<usize>,
    /// Random probes for the matrix constant.
    #[arg(long, default_value_t = 10_000)]
    pub probes: usize,
    /// Seed for the matrix constant probes.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report the spikiness of this matrix CSV instead.
    #[arg(long, conflicts_with_all = ["sigma", "dim", "d1", "d2"])]
    pub spikiness: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Sweep spec (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Results CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Override the base seed of the sweep config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cap on worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SlopeArgs {
    /// Results CSV.
    #[arg(long)]
    pub results: PathBuf,
    /// Regressor.
    #[arg(long, value_enum, default_value = "n")]
    pub x: XAxis,
    /// Error column.
    #[arg(long, value_enum, default_value = "l2")]
    pub y: ErrorField,
}

fn adversary_config(arg: AdversaryArg, magnitude: f64) -> AdversaryConfig {
    match arg {
        AdversaryArg::None => AdversaryConfig::None,
        AdversaryArg::RandomLarge => AdversaryConfig::RandomLarge { magnitude },
        AdversaryArg::SignFlip => AdversaryConfig::SignFlip,
        AdversaryArg::AdaptiveResidual => AdversaryConfig::AdaptiveResidual { magnitude },
    }
}

fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let s = &a.size;
    s.check()?;
    let noise = a.noise.config();
    let adversary = if s.o == 0 {
        AdversaryConfig::None
    } else {
        adversary_config(a.adversary, a.magnitude)
    };
    let cov = a.design.spec(s.kind);
    let truth = match s.kind {
        ProblemKind::Lasso => Truth::Vector(gen_sparse_beta(s.d, s.sparsity, a.beta_magnitude, split_seed(a.seed, 0))?),
        _ => Truth::Matrix(gen_low_rank(s.d1, s.d2, s.sparsity, a.spikiness_cap, split_seed(a.seed, 0))?),
    };
    let contamination = ContaminationSpec {
        o: s.o,
        strategy: adversary.adversary(),
        seed: split_seed(a.seed, 1),
    };
    let generated = gen_problem(&cov, &noise.spec(), &truth, s.n, &contamination, split_seed(a.seed, 2))?;
    let mut meta = Meta::new(s.kind, s.n);
    match s.kind {
        ProblemKind::Lasso => meta.d = Some(s.d),
        _ => {
            meta.d1 = Some(s.d1);
            meta.d2 = Some(s.d2);
        }
    }
    meta.seed = Some(a.seed);
    meta.o = Some(s.o);
    meta.sparsity = Some(s.sparsity);
    meta.subgaussian_l = cov.subgaussian_l();
    meta.rho = cov.rho();
    meta.design = (s.kind != ProblemKind::Completion).then_some(a.design);
    meta.noise = Some(noise);
    meta.adversary = Some(adversary);
    let problem = match generated {
        GeneratedProblem::Regression(p) => Problem::Regression(p),
        GeneratedProblem::Trace(p) => Problem::Trace(p),
    };
    Bundle { meta, problem }.write(&a.out)?;
    println!(
        "kind={} n={} d={} o={} seed={} out={}",
        s.kind,
        s.n,
        s.d_total(),
        s.o,
        a.seed,
        a.out.display()
    );
    Ok(())
}

fn solve_tuning(a: &SolveArgs, b: &Bundle) -> Result<TuningParams> {
    let meta = &b.meta;
    let theory = a.theory.config()?;
    let d1 = meta.d1.unwrap_or(0);
    let d2 = meta.d2.unwrap_or(0);
    let d_mc = ((d1 * d2) as f64).sqrt();
    let (lambda_o, lambda_star, theorem_radius) = match a.tuning {
        SolveTuning::Fixed => {
            let lo = a.lambda_o.ok_or_else(|| AppError::config("fixed tuning needs --lambda-o"))?;
            let ls = a.lambda_star.ok_or_else(|| AppError::config("fixed tuning needs --lambda-star"))?;
            (lo, ls, None)
        }
        SolveTuning::Theorem => {
            let need = |what: &str| AppError::config(format!("theorem tuning needs {what} in the bundle meta"));
            let facts = ProblemFacts {
                kind: meta.kind,
                n: meta.n,
                d: match meta.kind {
                    ProblemKind::Lasso => meta.d.ok_or_else(|| need("d"))?,
                    _ => d1 * d2,
                },
                d1,
                d2,
                sparsity: meta.sparsity.ok_or_else(|| need("sparsity"))?,
                o: meta.o.ok_or_else(|| need("o"))?,
                noise: meta.noise.ok_or_else(|| need("noise"))?.spec(),
                l: meta.subgaussian_l.unwrap_or(1.0),
                rho: meta.rho.unwrap_or(1.0),
            };
            let rep = theorem_report(&facts, &theory)?;
            (
                a.lambda_o.unwrap_or(rep.lambda_o),
                a.lambda_star.unwrap_or(rep.lambda_star),
                rep.inf_ball_radius,
            )
        }
    };
    let mut tp = TuningParams::new(lambda_o, lambda_star)?;
    if meta.kind == ProblemKind::Completion {
        tp = tp.with_radius(a.radius.or(theorem_radius).unwrap_or(theory.alpha_star / d_mc))?;
    }
    Ok(tp)
}

fn cmd_solve(a: &SolveArgs) -> Result<()> {
    let b = Bundle::read(&a.bundle)?;
    let tp = solve_tuning(a, &b)?;
    let mut cfg = SolverConfig::default();
    if let Some(v) = a.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = a.rel_tol {
        cfg.rel_tol = v;
    }
    cfg.validate()?;
    let (iterations, converged, objective, step) = match &b.problem {
        Problem::Regression(p) => {
            let r = solve_adversarial_lasso(p, &tp, &cfg, None)?;
            write_vector(&a.out, &r.estimate)?;
            (r.iterations, r.converged, r.final_objective(), r.final_step_size)
        }
        Problem::Trace(p) => {
            let r = if b.meta.kind == ProblemKind::Completion {
                solve_matrix_completion(p, &tp, &cfg, None)?
            } else {
                solve_matrix_cs(p, &tp, &cfg, None)?
            };
            write_matrix(&a.out, &r.estimate)?;
            (r.iterations, r.converged, r.final_objective(), r.final_step_size)
        }
    };
    let radius = tp.inf_ball_radius.map(|r| format!(" radius={}", fmt_float(r))).unwrap_or_default();
    println!(
        "lambda_o={} lambda_star={}{radius} final_objective={} iterations={iterations} converged={converged} final_step_size={} estimate={}",
        fmt_float(tp.lambda_o),
        fmt_float(tp.lambda_star),
        fmt_float(objective),
        fmt_float(step),
        a.out.display()
    );
    Ok(())
}

fn cmd_tune(a: &TuneArgs) -> Result<()> {
    let s = &a.size;
    s.check()?;
    let facts = ProblemFacts {
        kind: s.kind,
        n: s.n,
        d: s.d_total(),
        d1: s.d1,
        d2: s.d2,
        sparsity: s.sparsity,
        o: s.o,
        noise: a.noise.config().spec(),
        l: a.l,
        rho: a.rho,
    };
    let rep = theorem_report(&facts, &a.theory.config()?)?;
    let mut line = format!(
        "lambda_o={} huber_scale={} lambda_star={} r_lambda={} predicted_radius={}",
        fmt_float(rep.lambda_o),
        fmt_float(rep.huber_scale),
        fmt_float(rep.lambda_star),
        fmt_float(rep.r_lambda),
        fmt_float(rep.predicted_radius)
    );
    if let Some(f) = rep.radius_feasible {
        line.push_str(&format!(" radius_feasible={f}"));
    }
    if let Some(r) = rep.inf_ball_radius {
        line.push_str(&format!(" inf_ball_radius={}", fmt_float(r)));
    }
    println!("{line}");
    Ok(())
}

fn cmd_diagnose(a: &DiagnoseArgs) -> Result<()> {
    if let Some(path) = &a.spikiness {
        let m = read_matrix(path)?;
        println!("spikiness={}", fmt_float(spikiness(&m)?));
        return Ok(());
    }
    let sigma = match (&a.sigma, a.dim, a.d1.zip(a.d2)) {
        (Some(path), _, _) => read_matrix(path)?,
        (None, Some(dim), _) => DMatrix::identity(dim, dim),
        (None, None, Some((d1, d2))) => DMatrix::identity(d1 * d2, d1 * d2),
        (None, None, None) => return Err(AppError::config("diagnose needs --sigma, --dim, --d1/--d2 or --spikiness")),
    };
    let est = match a.d1.zip(a.d2) {
        Some((d1, d2)) => empirical_mre(
            &sigma,
            d1,
            d2,
            a.sparsity,
            a.c0,
            &MreConfig {
                probes: a.probes,
                seed: a.seed,
            },
        )?,
        None => empirical_re(&sigma, a.sparsity, a.c0, &ReConfig::default())?,
    };
    let support: Vec<String> = est.support.iter().map(|i| i.to_string()).collect();
    println!("kappa={} support={}", fmt_float(est.kappa), support.join(";"));
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, verbose: bool) -> Result<()> {
    let mut spec = SweepSpec::read(&a.config)?;
    if let Some(seed) = a.seed {
        spec.base_seed = seed;
    }
    if verbose {
        eprintln!("cells={} trials_per_cell={}", spec.cells().len(), spec.trials_per_cell);
    }
    let records = run_sweep(&spec, a.jobs)?;
    write_results(&records, &a.out)?;
    let failed = records.iter().filter(|r| !r.is_ok()).count();
    let unconverged = records.iter().filter(|r| r.is_ok() && !r.converged).count();
    println!(
        "records={} failed={failed} unconverged={unconverged} out={}",
        records.len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_slope(a: &SlopeArgs) -> Result<()> {
    let records = read_results(&a.results)?;
    let fit = fit_rate_slope(&records, a.x, a.y)?;
    println!(
        "slope={} intercept={} stderr={} points={}",
        fmt_float(fit.slope),
        fmt_float(fit.intercept),
        fmt_float(fit.stderr),
        fit.points.len()
    );
    Ok(())
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Diagnose(a) => cmd_diagnose(a),
        Command::Sweep(a) => cmd_sweep(a, cli.verbose),
        Command::Slope(a) => cmd_slope(a),
    }
}

/// Parses `args` (including the program name), runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

