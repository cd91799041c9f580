//! Parameter sweeps with repeated trials, results CSV and rate-slope fitting.
//!
//! A sweep is the cartesian product of its grids, enumerated with `n`
//! outermost, then dimensions, sparsity (or rank), `o`, noise and adversary.
//! Trial `t` of cell `c` draws everything from
//! `split_seed(split_seed(base_seed, c), t)`, so results do not depend on
//! thread count or scheduling.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use hubreg_core::datagen::{
    gen_low_rank, gen_problem, gen_sparse_beta, split_seed, ContaminationSpec, GeneratedProblem, Truth,
};
use hubreg_core::diagnostics::{error_metrics, Coefficients, ErrorMetrics};
use hubreg_core::solvers::{solve_adversarial_lasso, solve_matrix_completion, solve_matrix_cs, SolverConfig};
use hubreg_core::{DMatrix, DVector, TuningParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bundle::fmt_float;
use crate::config::{theorem_report, AdversaryConfig, DesignConfig, NoiseConfig, ProblemFacts, ProblemKind, TheoryConfig};
use crate::error::{AppError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TuningMode {
    /// Levels from the tuning calculators.
    #[default]
    Theorem,
    /// Levels given explicitly in the sweep config.
    Fixed,
    /// Theorem `lambda_o`; `lambda_*` picked from a multiplier grid by smallest
    /// true error. Uses ground truth, so it is an oracle.
    GridOracle,
}

impl TuningMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TuningMode::Theorem => "theorem",
            TuningMode::Fixed => "fixed",
            TuningMode::GridOracle => "grid_oracle",
        }
    }
}

/// Tuning section of a sweep spec.
///
/// In fixed mode `lambda_o` may be given directly or as `huber_scale`
/// (`lambda_o * sqrt(n)`), and `lambda_star` directly or as
/// `lambda_star_rate`, which multiplies `sqrt(ln d / n)` for lasso and
/// `sqrt((d1 + d2) / n)` for the matrix problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningSpec {
    pub mode: TuningMode,
    pub lambda_o: Option<f64>,
    pub huber_scale: Option<f64>,
    pub lambda_star: Option<f64>,
    pub lambda_star_rate: Option<f64>,
    /// Completion radius; defaults to `alpha_star / d_mc`.
    pub radius: Option<f64>,
    /// Multipliers on the theorem `lambda_*` searched by the grid oracle.
    pub grid: Vec<f64>,
    /// Replace the Huber scale by one far above every residual, which turns the
    /// loss into plain least squares.
    pub quadratic: bool,
    pub theory: TheoryConfig,
}

impl Default for TuningSpec {
    fn default() -> Self {
        TuningSpec {
            mode: TuningMode::Theorem,
            lambda_o: None,
            huber_scale: None,
            lambda_star: None,
            lambda_star_rate: None,
            radius: None,
            grid: (0..10).map(|k| 0.5f64.powi(k)).collect(),
            quadratic: false,
            theory: TheoryConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub max_iters: usize,
    pub rel_tol: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let c = SolverConfig::default();
        SolverSpec {
            max_iters: c.max_iters,
            rel_tol: c.rel_tol,
        }
    }
}

impl SolverSpec {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            ..SolverConfig::default()
        }
    }
}

/// A sweep, read from TOML.
///
/// ```toml
/// problem_kind = "lasso"
/// n = [200, 400, 800]
/// d = [100]
/// sparsity = [5]
/// o = [0]
/// noise = [{ kind = "gaussian", sigma = 0.1 }]
/// adversary = [{ kind = "none" }]
/// trials_per_cell = 20
/// base_seed = 1
///
/// [tuning]
/// mode = "theorem"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub problem_kind: ProblemKind,
    pub n: Vec<usize>,
    /// Lasso dimensions.
    #[serde(default)]
    pub d: Vec<usize>,
    /// Matrix dimensions `[d1, d2]`.
    #[serde(default)]
    pub dims: Vec<[usize; 2]>,
    /// `s` for lasso, rank `r` for the matrix problems.
    pub sparsity: Vec<usize>,
    pub o: Vec<usize>,
    pub noise: Vec<NoiseConfig>,
    #[serde(default = "default_adversary")]
    pub adversary: Vec<AdversaryConfig>,
    pub trials_per_cell: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub design: DesignConfig,
    /// Magnitude of the nonzero lasso coefficients.
    #[serde(default = "default_beta_magnitude")]
    pub beta_magnitude: f64,
    /// Spikiness cap for the low-rank truth.
    #[serde(default = "default_spikiness_cap")]
    pub spikiness_cap: f64,
    /// Store wall time in records. Off by default so reruns are byte-identical.
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub tuning: TuningSpec,
}

fn default_adversary() -> Vec<AdversaryConfig> {
    vec![AdversaryConfig::None]
}

fn default_beta_magnitude() -> f64 {
    1.0
}

fn default_spikiness_cap() -> f64 {
    3.0
}

/// One point of the sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub n: usize,
    pub d: usize,
    pub d1: usize,
    pub d2: usize,
    pub sparsity: usize,
    pub o: usize,
    pub noise: NoiseConfig,
    pub adversary: AdversaryConfig,
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<SweepSpec> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| AppError::config(format!("sweep spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn read(path: &Path) -> Result<SweepSpec> {
        let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let spec: SweepSpec = toml::from_str(&text).map_err(|e| AppError::format(path, e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let nonempty = |name: &str, len: usize| {
            if len == 0 {
                Err(AppError::config(format!("sweep grid {name} is empty")))
            } else {
                Ok(())
            }
        };
        nonempty("n", self.n.len())?;
        nonempty("sparsity", self.sparsity.len())?;
        nonempty("o", self.o.len())?;
        nonempty("noise", self.noise.len())?;
        nonempty("adversary", self.adversary.len())?;
        match self.problem_kind {
            ProblemKind::Lasso => nonempty("d", self.d.len())?,
            _ => nonempty("dims", self.dims.len())?,
        }
        if self.trials_per_cell == 0 {
            return Err(AppError::config("trials_per_cell must be at least 1"));
        }
        if let Some(&n) = self.n.iter().find(|&&n| n == 0) {
            return Err(AppError::config(format!("n must be positive, got {n}")));
        }
        let max_o = *self.o.iter().max().unwrap_or(&0);
        let min_n = *self.n.iter().min().unwrap_or(&0);
        if max_o > min_n {
            return Err(AppError::config(format!("o = {max_o} exceeds n = {min_n}")));
        }
        for noise in &self.noise {
            noise.spec().validate()?;
        }
        self.solver.config().validate()?;
        let t = &self.tuning;
        if t.mode == TuningMode::Fixed {
            if t.lambda_o.is_some() == t.huber_scale.is_some() {
                return Err(AppError::config("fixed tuning needs exactly one of lambda_o and huber_scale"));
            }
            if t.lambda_star.is_some() == t.lambda_star_rate.is_some() {
                return Err(AppError::config("fixed tuning needs exactly one of lambda_star and lambda_star_rate"));
            }
        }
        if t.mode == TuningMode::GridOracle && t.grid.is_empty() {
            return Err(AppError::config("grid_oracle tuning needs a nonempty grid"));
        }
        if let Some(v) = t.grid.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(AppError::config(format!("grid multipliers must be positive, got {v}")));
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<Cell> {
        let dims: Vec<(usize, usize, usize)> = match self.problem_kind {
            ProblemKind::Lasso => self.d.iter().map(|&d| (d, 0, 0)).collect(),
            _ => self.dims.iter().map(|&[a, b]| (a * b, a, b)).collect(),
        };
        let mut cells = Vec::new();
        for &n in &self.n {
            for &(d, d1, d2) in &dims {
                for &sparsity in &self.sparsity {
                    for &o in &self.o {
                        for noise in &self.noise {
                            for adversary in &self.adversary {
                                cells.push(Cell {
                                    index: cells.len(),
                                    n,
                                    d,
                                    d1,
                                    d2,
                                    sparsity,
                                    o,
                                    noise: *noise,
                                    adversary: *adversary,
                                });
                            }
                        }
                    }
                }
            }
        }
        cells
    }
}

/// One trial of one cell. Float fields are NaN when the trial failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub cell: usize,
    pub trial: usize,
    pub problem_kind: ProblemKind,
    pub n: usize,
    pub d: usize,
    pub d1: usize,
    pub d2: usize,
    pub sparsity: usize,
    pub o: usize,
    pub noise: String,
    pub adversary: String,
    pub tuning_mode: TuningMode,
    pub quadratic: bool,
    pub lambda_o: f64,
    pub lambda_star: f64,
    pub seed: u64,
    /// `ok`, or `error: <message>`.
    pub status: String,
    pub converged: bool,
    pub iterations: usize,
    pub final_objective: f64,
    pub l2_error: f64,
    pub relative_error: f64,
    /// Lasso only; zero for the matrix problems.
    pub estimated_support: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    /// Matrix problems only; zero for lasso.
    pub estimated_rank: usize,
    /// Largest absolute entry of the estimate.
    pub max_abs_entry: f64,
    pub wall_time_s: f64,
}

pub const RESULTS_HEADER: [&str; 28] = [
    "cell",
    "trial",
    "problem_kind",
    "n",
    "d",
    "d1",
    "d2",
    "sparsity",
    "o",
    "noise",
    "adversary",
    "tuning_mode",
    "quadratic",
    "lambda_o",
    "lambda_star",
    "seed",
    "status",
    "converged",
    "iterations",
    "final_objective",
    "l2_error",
    "relative_error",
    "estimated_support",
    "true_positives",
    "false_positives",
    "estimated_rank",
    "max_abs_entry",
    "wall_time_s",
];

impl ExperimentRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn o_frac(&self) -> f64 {
        self.o as f64 / self.n as f64
    }

    fn to_row(&self) -> Vec<String> {
        vec![
            self.cell.to_string(),
            self.trial.to_string(),
            self.problem_kind.to_string(),
            self.n.to_string(),
            self.d.to_string(),
            self.d1.to_string(),
            self.d2.to_string(),
            self.sparsity.to_string(),
            self.o.to_string(),
            self.noise.clone(),
            self.adversary.clone(),
            self.tuning_mode.as_str().to_string(),
            self.quadratic.to_string(),
            fmt_float(self.lambda_o),
            fmt_float(self.lambda_star),
            self.seed.to_string(),
            self.status.clone(),
            self.converged.to_string(),
            self.iterations.to_string(),
            fmt_float(self.final_objective),
            fmt_float(self.l2_error),
            fmt_float(self.relative_error),
            self.estimated_support.to_string(),
            self.true_positives.to_string(),
            self.false_positives.to_string(),
            self.estimated_rank.to_string(),
            fmt_float(self.max_abs_entry),
            fmt_float(self.wall_time_s),
        ]
    }

    fn from_row(path: &Path, line: usize, row: &csv::StringRecord) -> Result<ExperimentRecord> {
        if row.len() != RESULTS_HEADER.len() {
            return Err(AppError::format(
                path,
                format!("line {line}: expected {} fields, found {}", RESULTS_HEADER.len(), row.len()),
            ));
        }
        let field = |i: usize| &row[i];
        fn parse<T: std::str::FromStr>(path: &Path, line: usize, name: &str, v: &str) -> Result<T> {
            v.parse::<T>()
                .map_err(|_| AppError::format(path, format!("line {line}: bad {name} value {v:?}")))
        }
        let p = |i: usize| -> &str { field(i) };
        let kind = match p(2) {
            "lasso" => ProblemKind::Lasso,
            "matrix_cs" => ProblemKind::MatrixCs,
            "completion" => ProblemKind::Completion,
            other => return Err(AppError::format(path, format!("line {line}: unknown problem_kind {other:?}"))),
        };
        let mode = match p(11) {
            "theorem" => TuningMode::Theorem,
            "fixed" => TuningMode::Fixed,
            "grid_oracle" => TuningMode::GridOracle,
            other => return Err(AppError::format(path, format!("line {line}: unknown tuning_mode {other:?}"))),
        };
        Ok(ExperimentRecord {
            cell: parse(path, line, "cell", p(0))?,
            trial: parse(path, line, "trial", p(1))?,
            problem_kind: kind,
            n: parse(path, line, "n", p(3))?,
            d: parse(path, line, "d", p(4))?,
            d1: parse(path, line, "d1", p(5))?,
            d2: parse(path, line, "d2", p(6))?,
            sparsity: parse(path, line, "sparsity", p(7))?,
            o: parse(path, line, "o", p(8))?,
            noise: p(9).to_string(),
            adversary: p(10).to_string(),
            tuning_mode: mode,
            quadratic: parse(path, line, "quadratic", p(12))?,
            lambda_o: parse(path, line, "lambda_o", p(13))?,
            lambda_star: parse(path, line, "lambda_star", p(14))?,
            seed: parse(path, line, "seed", p(15))?,
            status: p(16).to_string(),
            converged: parse(path, line, "converged", p(17))?,
            iterations: parse(path, line, "iterations", p(18))?,
            final_objective: parse(path, line, "final_objective", p(19))?,
            l2_error: parse(path, line, "l2_error", p(20))?,
            relative_error: parse(path, line, "relative_error", p(21))?,
            estimated_support: parse(path, line, "estimated_support", p(22))?,
            true_positives: parse(path, line, "true_positives", p(23))?,
            false_positives: parse(path, line, "false_positives", p(24))?,
            estimated_rank: parse(path, line, "estimated_rank", p(25))?,
            max_abs_entry: parse(path, line, "max_abs_entry", p(26))?,
            wall_time_s: parse(path, line, "wall_time_s", p(27))?,
        })
    }
}

/// Writes records as CSV with a header row and 17 significant digits per float.
pub fn write_results(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| AppError::from_csv(path, e))?;
    w.write_record(RESULTS_HEADER).map_err(|e| AppError::from_csv(path, e))?;
    for r in records {
        w.write_record(r.to_row()).map_err(|e| AppError::from_csv(path, e))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

pub fn read_results(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| AppError::from_csv(path, e))?;
    let header = r.headers().map_err(|e| AppError::from_csv(path, e))?.clone();
    if header.iter().ne(RESULTS_HEADER.iter().copied()) {
        return Err(AppError::format(path, "header does not match the results column layout"));
    }
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row.map_err(|e| AppError::from_csv(path, e))?;
        out.push(ExperimentRecord::from_row(path, i + 2, &row)?);
    }
    Ok(out)
}

/// Resolves the levels for one generated problem.
///
/// Theorem levels are computed from the cell facts; fixed levels are taken
/// from the sweep config; quadratic mode finally replaces `lambda_o` by a value whose
/// Huber scale exceeds every plausible residual.
fn resolve_tuning(spec: &SweepSpec, cell: &Cell, y: &DVector<f64>) -> Result<TuningParams> {
    let t = &spec.tuning;
    let n = cell.n as f64;
    let d_mc = ((cell.d1 * cell.d2) as f64).sqrt();
    let (mut lambda_o, lambda_star, theorem_radius) = match t.mode {
        TuningMode::Theorem | TuningMode::GridOracle => {
            let cov = spec.design.spec(spec.problem_kind);
            let facts = ProblemFacts {
                kind: spec.problem_kind,
                n: cell.n,
                d: cell.d,
                d1: cell.d1,
                d2: cell.d2,
                sparsity: cell.sparsity,
                o: cell.o,
                noise: cell.noise.spec(),
                l: cov.subgaussian_l().unwrap_or(1.0),
                rho: cov.rho().unwrap_or(1.0),
            };
            let rep = theorem_report(&facts, &t.theory)?;
            (rep.lambda_o, rep.lambda_star, rep.inf_ball_radius)
        }
        TuningMode::Fixed => {
            let lambda_o = match (t.lambda_o, t.huber_scale) {
                (Some(v), _) => v,
                (None, Some(hs)) => hs / n.sqrt(),
                (None, None) => return Err(AppError::config("fixed tuning needs lambda_o or huber_scale")),
            };
            let lambda_star = match (t.lambda_star, t.lambda_star_rate) {
                (Some(v), _) => v,
                (None, Some(rate)) => {
                    let complexity = match spec.problem_kind {
                        ProblemKind::Lasso => (cell.d as f64).ln(),
                        _ => (cell.d1 + cell.d2) as f64,
                    };
                    rate * (complexity / n).sqrt()
                }
                (None, None) => return Err(AppError::config("fixed tuning needs lambda_star or lambda_star_rate")),
            };
            (lambda_o, lambda_star, None)
        }
    };
    if t.quadratic {
        let ymax = y.amax();
        lambda_o = 1e8 * (1.0 + ymax) / n.sqrt();
    }
    let mut tp = TuningParams::new(lambda_o, lambda_star)?;
    if spec.problem_kind == ProblemKind::Completion {
        let radius = t.radius.or(theorem_radius).unwrap_or(t.theory.alpha_star / d_mc);
        tp = tp.with_radius(radius)?;
    }
    Ok(tp)
}

enum Estimate {
    Vector(DVector<f64>),
    Matrix(DMatrix<f64>),
}

struct Fit {
    estimate: Estimate,
    converged: bool,
    iterations: usize,
    final_objective: f64,
}

fn solve(problem: &GeneratedProblem, kind: ProblemKind, tp: &TuningParams, cfg: &SolverConfig, init: Option<&Estimate>) -> Result<Fit> {
    match (problem, init) {
        (GeneratedProblem::Regression(p), init) => {
            let init = match init {
                Some(Estimate::Vector(v)) => Some(v),
                _ => None,
            };
            let r = solve_adversarial_lasso(p, tp, cfg, init)?;
            Ok(Fit {
                converged: r.converged,
                iterations: r.iterations,
                final_objective: r.final_objective(),
                estimate: Estimate::Vector(r.estimate),
            })
        }
        (GeneratedProblem::Trace(p), init) => {
            let init = match init {
                Some(Estimate::Matrix(m)) => Some(m),
                _ => None,
            };
            let r = if kind == ProblemKind::Completion {
                solve_matrix_completion(p, tp, cfg, init)?
            } else {
                solve_matrix_cs(p, tp, cfg, init)?
            };
            Ok(Fit {
                converged: r.converged,
                iterations: r.iterations,
                final_objective: r.final_objective(),
                estimate: Estimate::Matrix(r.estimate),
            })
        }
    }
}

fn metrics_of(est: &Estimate, truth: &Truth) -> Result<ErrorMetrics> {
    let m = match (est, truth) {
        (Estimate::Vector(e), Truth::Vector(t)) => error_metrics(Coefficients::Vector(e), Coefficients::Vector(t), None)?,
        (Estimate::Matrix(e), Truth::Matrix(t)) => error_metrics(Coefficients::Matrix(e), Coefficients::Matrix(t), None)?,
        _ => return Err(AppError::Internal("estimate and truth have different shapes".into())),
    };
    Ok(m)
}

fn max_abs(est: &Estimate) -> f64 {
    match est {
        Estimate::Vector(v) => v.amax(),
        Estimate::Matrix(m) => m.amax(),
    }
}

struct TrialOutcome {
    tp: TuningParams,
    fit: Fit,
    metrics: ErrorMetrics,
}

fn run_trial_inner(spec: &SweepSpec, cell: &Cell, seed: u64) -> Result<TrialOutcome> {
    let truth = match spec.problem_kind {
        ProblemKind::Lasso => Truth::Vector(gen_sparse_beta(cell.d, cell.sparsity, spec.beta_magnitude, split_seed(seed, 0))?),
        _ => Truth::Matrix(gen_low_rank(cell.d1, cell.d2, cell.sparsity, spec.spikiness_cap, split_seed(seed, 0))?),
    };
    let contamination = ContaminationSpec {
        o: cell.o,
        strategy: cell.adversary.adversary(),
        seed: split_seed(seed, 1),
    };
    let problem = gen_problem(
        &spec.design.spec(spec.problem_kind),
        &cell.noise.spec(),
        &truth,
        cell.n,
        &contamination,
        split_seed(seed, 2),
    )?;
    let y = match &problem {
        GeneratedProblem::Regression(p) => &p.y,
        GeneratedProblem::Trace(p) => &p.y,
    };
    let base = resolve_tuning(spec, cell, y)?;
    let cfg = spec.solver.config();

    if spec.tuning.mode != TuningMode::GridOracle {
        let fit = solve(&problem, spec.problem_kind, &base, &cfg, None)?;
        let metrics = metrics_of(&fit.estimate, &truth)?;
        return Ok(TrialOutcome { tp: base, fit, metrics });
    }

    // Largest multiplier first so each fit warm-starts the next, sparser-to-denser.
    let mut grid = spec.tuning.grid.clone();
    grid.sort_by(|a, b| b.total_cmp(a));
    let mut best: Option<TrialOutcome> = None;
    let mut prev: Option<Estimate> = None;
    for m in grid {
        let mut tp = base.clone();
        tp.lambda_star = base.lambda_star * m;
        let fit = solve(&problem, spec.problem_kind, &tp, &cfg, prev.as_ref())?;
        let metrics = metrics_of(&fit.estimate, &truth)?;
        prev = Some(match &fit.estimate {
            Estimate::Vector(v) => Estimate::Vector(v.clone()),
            Estimate::Matrix(b) => Estimate::Matrix(b.clone()),
        });
        if best.as_ref().is_none_or(|b| metrics.l2 < b.metrics.l2) {
            best = Some(TrialOutcome { tp, fit, metrics });
        }
    }
    best.ok_or_else(|| AppError::Internal("empty oracle grid".into()))
}

fn run_trial(spec: &SweepSpec, cell: &Cell, trial: usize) -> ExperimentRecord {
    let seed = split_seed(split_seed(spec.base_seed, cell.index as u64), trial as u64);
    let start = Instant::now();
    let outcome = run_trial_inner(spec, cell, seed);
    let wall = if spec.record_timing { start.elapsed().as_secs_f64() } else { 0.0 };
    let mut rec = ExperimentRecord {
        cell: cell.index,
        trial,
        problem_kind: spec.problem_kind,
        n: cell.n,
        d: cell.d,
        d1: cell.d1,
        d2: cell.d2,
        sparsity: cell.sparsity,
        o: cell.o,
        noise: cell.noise.to_string(),
        adversary: cell.adversary.to_string(),
        tuning_mode: spec.tuning.mode,
        quadratic: spec.tuning.quadratic,
        lambda_o: f64::NAN,
        lambda_star: f64::NAN,
        seed,
        status: String::new(),
        converged: false,
        iterations: 0,
        final_objective: f64::NAN,
        l2_error: f64::NAN,
        relative_error: f64::NAN,
        estimated_support: 0,
        true_positives: 0,
        false_positives: 0,
        estimated_rank: 0,
        max_abs_entry: f64::NAN,
        wall_time_s: wall,
    };
    match outcome {
        Ok(out) => {
            rec.status = "ok".into();
            rec.lambda_o = out.tp.lambda_o;
            rec.lambda_star = out.tp.lambda_star;
            rec.converged = out.fit.converged;
            rec.iterations = out.fit.iterations;
            rec.final_objective = out.fit.final_objective;
            rec.l2_error = out.metrics.l2;
            rec.relative_error = out.metrics.relative;
            if let Some(s) = out.metrics.support {
                rec.estimated_support = s.estimated_size;
                rec.true_positives = s.true_positives;
                rec.false_positives = s.false_positives;
            }
            if let Some(r) = out.metrics.rank {
                rec.estimated_rank = r.estimated_rank;
            }
            rec.max_abs_entry = max_abs(&out.fit.estimate);
        }
        Err(e) => rec.status = format!("error: {e}"),
    }
    rec
}

/// Runs every trial of every cell. Records come back ordered by `(cell, trial)`;
/// per-trial failures are recorded in `status`, not raised.
///
/// `jobs` caps the worker threads; `None` uses rayon's default.
pub fn run_sweep(spec: &SweepSpec, jobs: Option<usize>) -> Result<Vec<ExperimentRecord>> {
    spec.validate()?;
    let work: Vec<(Cell, usize)> = spec
        .cells()
        .into_iter()
        .flat_map(|c| (0..spec.trials_per_cell).map(move |t| (c.clone(), t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| AppError::Internal(format!("thread pool: {e}")))?;
    Ok(pool.install(|| work.par_iter().map(|(c, t)| run_trial(spec, c, *t)).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum XAxis {
    N,
    OFrac,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ErrorField {
    L2,
    Relative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    /// `(x, median error)` per distinct `x`, ascending.
    pub points: Vec<(f64, f64)>,
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        0.5 * (xs[k / 2 - 1] + xs[k / 2])
    }
}

/// Median error per distinct `x`, over successful trials with a finite error.
pub fn median_by_x(records: &[ExperimentRecord], x_axis: XAxis, y: ErrorField) -> Vec<(f64, f64)> {
    let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.is_ok()) {
        let x = match x_axis {
            XAxis::N => r.n as f64,
            XAxis::OFrac => r.o_frac(),
        };
        let v = match y {
            ErrorField::L2 => r.l2_error,
            ErrorField::Relative => r.relative_error,
        };
        if v.is_finite() {
            // Bit patterns of nonnegative floats sort like the floats.
            groups.entry(x.to_bits()).or_default().push(v);
        }
    }
    groups
        .into_iter()
        .map(|(x, mut vs)| (f64::from_bits(x), median(&mut vs)))
        .collect()
}

/// Ordinary least squares of log median error on log `x`.
pub fn fit_rate_slope(records: &[ExperimentRecord], x_axis: XAxis, y: ErrorField) -> Result<SlopeFit> {
    let points = median_by_x(records, x_axis, y);
    if points.len() < 3 {
        return Err(AppError::config(format!(
            "slope fit needs at least 3 distinct x values, found {}",
            points.len()
        )));
    }
    if let Some((x, v)) = points.iter().find(|(x, v)| !(*x > 0.0 && *v > 0.0)) {
        return Err(AppError::config(format!("slope fit needs positive x and error, found x = {x}, error = {v}")));
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (sse / (k - 2.0) / sxx).sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        stderr,
        points,
    })
}
