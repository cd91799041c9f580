//! Problem bundles: a directory of headerless numeric CSV files plus `meta.toml`.
//!
//! | file           | contents                                                 |
//! |----------------|----------------------------------------------------------|
//! | `y.csv`        | `n` rows, one response per row                           |
//! | `X.csv`        | `n` rows of covariates (`d` columns, or `vec(X_i)`)      |
//! | `masks.csv`    | header `i,k,l,sign`, one observed cell per observation  |
//! | `beta_true.csv`| optional, `d` rows                                       |
//! | `B_true.csv`   | optional, `d1` rows by `d2` columns                      |
//! | `theta_true.csv` | optional, `n` rows, contamination before `sqrt(n)`     |
//! | `meta.toml`    | problem kind, sizes, seed, contamination and noise facts |

use std::fs;
use std::path::{Path, PathBuf};

use hubreg_core::{DMatrix, DVector, MaskEntry, RegressionProblem, Sign, TraceDesign, TraceProblem};
use serde::{Deserialize, Serialize};

use crate::config::{AdversaryConfig, DesignConfig, NoiseConfig, ProblemKind};
use crate::error::{AppError, Result};

pub const META_FILE: &str = "meta.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub kind: ProblemKind,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d1: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d2: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub o: Option<usize>,
    /// `s` for lasso, `r` for the matrix problems.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sparsity: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subgaussian_l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adversary: Option<AdversaryConfig>,
}

impl Meta {
    pub fn new(kind: ProblemKind, n: usize) -> Self {
        Meta {
            kind,
            n,
            d: None,
            d1: None,
            d2: None,
            seed: None,
            o: None,
            sparsity: None,
            subgaussian_l: None,
            rho: None,
            design: None,
            noise: None,
            adversary: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Regression(RegressionProblem),
    Trace(TraceProblem),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub meta: Meta,
    pub problem: Problem,
}

pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_float(path: &Path, line: usize, field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| AppError::format(path, format!("line {line}: cannot parse {field:?} as a number")))
}

/// Writes rows of numbers as headerless CSV.
pub fn write_rows<I, R>(path: &Path, rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = f64>,
{
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| AppError::from_csv(path, e))?;
    for row in rows {
        let rec: Vec<String> = row.into_iter().map(fmt_float).collect();
        w.write_record(&rec).map_err(|e| AppError::from_csv(path, e))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

/// Reads headerless numeric CSV into rows; all rows must have the same width.
pub fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| AppError::from_csv(path, e))?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| AppError::from_csv(path, e))?;
        let row = rec.iter().map(|f| parse_float(path, i + 1, f)).collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_vector(path: &Path, v: &DVector<f64>) -> Result<()> {
    write_rows(path, v.iter().map(|x| [*x]))
}

pub fn read_vector(path: &Path) -> Result<DVector<f64>> {
    let rows = read_rows(path)?;
    if let Some(i) = rows.iter().position(|r| r.len() != 1) {
        return Err(AppError::format(path, format!("line {}: expected one column", i + 1)));
    }
    Ok(DVector::from_iterator(rows.len(), rows.into_iter().map(|r| r[0])))
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_rows(path, m.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let rows = read_rows(path)?;
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(AppError::format(path, format!("line {}: expected {ncols} columns", i + 1)));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

#[derive(Debug, Serialize, Deserialize)]
struct MaskRow {
    i: usize,
    k: usize,
    l: usize,
    sign: i64,
}

fn write_masks(path: &Path, entries: &[MaskEntry]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| AppError::from_csv(path, e))?;
    for (i, e) in entries.iter().enumerate() {
        w.serialize(MaskRow {
            i,
            k: e.row,
            l: e.col,
            sign: e.sign.value() as i64,
        })
        .map_err(|e| AppError::from_csv(path, e))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

fn read_masks(path: &Path) -> Result<Vec<MaskEntry>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| AppError::from_csv(path, e))?;
    let mut out = Vec::new();
    for (line, row) in r.deserialize::<MaskRow>().enumerate() {
        let row = row.map_err(|e| AppError::from_csv(path, e))?;
        if row.i != line {
            return Err(AppError::format(path, format!("row {}: expected i = {line}, found {}", line + 1, row.i)));
        }
        let sign = Sign::from_value(row.sign)
            .ok_or_else(|| AppError::format(path, format!("row {}: sign must be -1 or 1", line + 1)))?;
        out.push(MaskEntry {
            row: row.k,
            col: row.l,
            sign,
        });
    }
    Ok(out)
}

fn outliers_from_theta(theta: &DVector<f64>) -> Vec<usize> {
    (0..theta.len()).filter(|&i| theta[i] != 0.0).collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))
}

impl Bundle {
    pub fn write(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        let file = |name: &str| -> PathBuf { dir.join(name) };
        match &self.problem {
            Problem::Regression(p) => {
                write_vector(&file("y.csv"), &p.y)?;
                write_matrix(&file("X.csv"), &p.x)?;
                if let Some(b) = &p.beta_true {
                    write_vector(&file("beta_true.csv"), b)?;
                }
                if let Some(t) = &p.theta_true {
                    write_vector(&file("theta_true.csv"), t)?;
                }
            }
            Problem::Trace(p) => {
                write_vector(&file("y.csv"), &p.y)?;
                match &p.design {
                    TraceDesign::Mask(entries) => write_masks(&file("masks.csv"), entries)?,
                    TraceDesign::Dense(_) => write_matrix(&file("X.csv"), &p.design_matrix())?,
                }
                if let Some(b) = &p.b_true {
                    write_matrix(&file("B_true.csv"), b)?;
                }
                if let Some(t) = &p.theta_true {
                    write_vector(&file("theta_true.csv"), t)?;
                }
            }
        }
        let text = toml::to_string(&self.meta).map_err(|e| AppError::Internal(format!("meta serialization: {e}")))?;
        let path = file(META_FILE);
        fs::write(&path, text).map_err(|e| AppError::io(&path, e))
    }

    pub fn read(dir: &Path) -> Result<Bundle> {
        let meta = read_meta(dir)?;
        let file = |name: &str| -> PathBuf { dir.join(name) };
        let optional_vector = |name: &str| -> Result<Option<DVector<f64>>> {
            let path = file(name);
            if path.exists() {
                read_vector(&path).map(Some)
            } else {
                Ok(None)
            }
        };
        let y = read_vector(&file("y.csv"))?;
        if y.len() != meta.n {
            return Err(AppError::config(format!("meta n = {} but y.csv has {} rows", meta.n, y.len())));
        }
        let theta = optional_vector("theta_true.csv")?;
        let outliers = theta.as_ref().map(outliers_from_theta);
        let problem = match meta.kind {
            ProblemKind::Lasso => {
                let x = read_matrix(&file("X.csv"))?;
                if let Some(d) = meta.d {
                    if x.ncols() != d {
                        return Err(AppError::config(format!("meta d = {d} but X.csv has {} columns", x.ncols())));
                    }
                }
                let mut p = RegressionProblem::new(y, x);
                p.beta_true = optional_vector("beta_true.csv")?;
                p.theta_true = theta;
                p.outlier_index_set = outliers;
                Problem::Regression(p.validated()?)
            }
            ProblemKind::MatrixCs | ProblemKind::Completion => {
                let (d1, d2) = match (meta.d1, meta.d2) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return Err(AppError::config("meta must set d1 and d2 for matrix problems")),
                };
                let masks = file("masks.csv");
                let design = if masks.exists() {
                    TraceDesign::Mask(read_masks(&masks)?)
                } else {
                    let x = read_matrix(&file("X.csv"))?;
                    if x.ncols() != d1 * d2 {
                        return Err(AppError::config(format!(
                            "X.csv has {} columns, expected d1 * d2 = {}",
                            x.ncols(),
                            d1 * d2
                        )));
                    }
                    TraceDesign::Dense(
                        x.row_iter()
                            .map(|r| DMatrix::from_column_slice(d1, d2, r.clone_owned().as_slice()))
                            .collect(),
                    )
                };
                let mut p = TraceProblem::new(y, design, d1, d2);
                let b = file("B_true.csv");
                if b.exists() {
                    p.b_true = Some(read_matrix(&b)?);
                }
                p.theta_true = theta;
                p.outlier_index_set = outliers;
                Problem::Trace(p.validated()?)
            }
        };
        Ok(Bundle { meta, problem })
    }
}

pub fn read_meta(dir: &Path) -> Result<Meta> {
    let path = dir.join(META_FILE);
    let text = fs::read_to_string(&path).map_err(|e| AppError::io(&path, e))?;
    toml::from_str(&text).map_err(|e| AppError::format(&path, e.to_string()))
}
