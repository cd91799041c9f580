//! Brute-force upper bounds on restricted eigenvalue constants.
//!
//! Both searches evaluate the ratio `||Sigma^(1/2) v|| / ||v_J||` on feasible
//! points of the restricted cone, so every value found is an upper bound on the
//! true infimum. They are meant for small dimensions only.

use alloc::string::ToString;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::datagen::rng_from_seed;
use crate::error::{Error, Result};
use crate::linalg;
use crate::math;

pub const RE_MAX_DIM: usize = 12;
pub const RE_MAX_SPARSITY: usize = 3;
pub const MRE_MAX_DIM: usize = 4;
pub const MRE_MAX_RANK: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReConfig {
    /// Angular grid points per half-turn on the support sphere.
    pub grid: usize,
    /// Rounds of local pattern search around the best grid point.
    pub refine_rounds: usize,
    /// Projected-gradient iterations for the off-support minimisation.
    pub inner_iters: usize,
}

impl Default for ReConfig {
    fn default() -> Self {
        ReConfig {
            grid: 12,
            refine_rounds: 30,
            inner_iters: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReEstimate {
    pub kappa: f64,
    /// Minimising support (empty for the matrix search).
    pub support: Vec<usize>,
    /// Minimising direction `v` (vec of the matrix for the matrix search).
    pub direction: DVector<f64>,
}

fn check_sigma(sigma: &DMatrix<f64>) -> Result<()> {
    linalg::check_square_symmetric(sigma, "Sigma")?;
    // rejects indefinite input
    linalg::sym_sqrt(sigma).map(|_| ())
}

/// Euclidean projection onto `{w : ||w||_1 <= radius}`.
fn project_l1_ball(w: &DVector<f64>, radius: f64) -> DVector<f64> {
    if w.iter().map(|x| x.abs()).sum::<f64>() <= radius {
        return w.clone();
    }
    let mut mags: Vec<f64> = w.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, m) in mags.iter().enumerate() {
        cum += m;
        let t = (cum - radius) / (k + 1) as f64;
        if *m > t {
            theta = t;
        }
    }
    w.map(|x| math::sgn(x) * (x.abs() - theta).max(0.0))
}

fn subsets(d: usize, max_size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, d: usize, max_size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if cur.len() == max_size {
            return;
        }
        for j in start..d {
            cur.push(j);
            rec(j + 1, d, max_size, cur, out);
            cur.pop();
        }
    }
    rec(0, d, max_size, &mut cur, &mut out);
    out
}

/// Unit vector in `R^k` (k <= 3) from up to two angles.
fn sphere_point(k: usize, angles: &[f64]) -> DVector<f64> {
    match k {
        1 => DVector::from_element(1, 1.0),
        2 => DVector::from_vec(alloc::vec![libm::cos(angles[0]), libm::sin(angles[0])]),
        _ => {
            let (a, b) = (angles[0], angles[1]);
            DVector::from_vec(alloc::vec![
                libm::cos(a),
                libm::sin(a) * libm::cos(b),
                libm::sin(a) * libm::sin(b)
            ])
        }
    }
}

struct SupportSearch<'a> {
    sigma: &'a DMatrix<f64>,
    on: Vec<usize>,
    off: Vec<usize>,
    c0: f64,
    inner_iters: usize,
    step: f64,
}

impl SupportSearch<'_> {
    /// `min_w (u, w)^T Sigma (u, w)` over `||w||_1 <= c0 ||u||_1`, returning the value and full vector.
    fn evaluate(&self, u: &DVector<f64>) -> (f64, DVector<f64>) {
        let d = self.sigma.nrows();
        let mut v = DVector::zeros(d);
        for (a, &j) in self.on.iter().enumerate() {
            v[j] = u[a];
        }
        let quad = |v: &DVector<f64>| v.dot(&(self.sigma * v));
        if self.off.is_empty() || self.step == 0.0 {
            let q = quad(&v);
            return (q, v);
        }
        let radius = self.c0 * u.iter().map(|x| x.abs()).sum::<f64>();
        let mut w = DVector::zeros(self.off.len());
        let mut z = w.clone();
        let mut t = 1.0;
        for _ in 0..self.inner_iters {
            for (b, &j) in self.off.iter().enumerate() {
                v[j] = z[b];
            }
            let g = self.sigma * &v;
            let grad = DVector::from_iterator(self.off.len(), self.off.iter().map(|&j| 2.0 * g[j]));
            let w_next = project_l1_ball(&(&z - grad * self.step), radius);
            let t_next = (1.0 + math::sqrt(1.0 + 4.0 * t * t)) / 2.0;
            z = &w_next + (&w_next - &w) * ((t - 1.0) / t_next);
            let moved = (&w_next - &w).norm();
            w = w_next;
            t = t_next;
            if moved <= 1e-12 {
                break;
            }
        }
        for (b, &j) in self.off.iter().enumerate() {
            v[j] = w[b];
        }
        let q = quad(&v);
        (q, v)
    }
}

/// Upper bound on `kappa(s, c0) = inf ||Sigma^(1/2) v|| / ||v_J||` over
/// `|J| <= s`, `||v_{J^c}||_1 <= c0 ||v_J||_1`.
///
/// Every support is enumerated; on each, the support part `u` ranges over an
/// angular grid of the unit sphere (then pattern-search refinement) while the
/// off-support part is minimised exactly as a convex quadratic over an l1 ball.
pub fn empirical_re(sigma: &DMatrix<f64>, s: usize, c0: f64, cfg: &ReConfig) -> Result<ReEstimate> {
    check_sigma(sigma)?;
    let d = sigma.nrows();
    if d > RE_MAX_DIM {
        return Err(Error::TooLarge {
            what: "RE search dimension",
            limit: RE_MAX_DIM.to_string(),
            found: d.to_string(),
        });
    }
    if s > RE_MAX_SPARSITY {
        return Err(Error::TooLarge {
            what: "RE search sparsity",
            limit: RE_MAX_SPARSITY.to_string(),
            found: s.to_string(),
        });
    }
    if s == 0 || s > d {
        return Err(Error::param("s", alloc::format!("must lie in 1..={d}")));
    }
    if !(c0 >= 0.0 && c0.is_finite()) {
        return Err(Error::param("c0", "must be non-negative and finite"));
    }
    if cfg.grid == 0 {
        return Err(Error::param("grid", "must be positive"));
    }

    let half_turn = core::f64::consts::PI;
    let mut best: Option<ReEstimate> = None;
    for on in subsets(d, s) {
        let k = on.len();
        let off: Vec<usize> = (0..d).filter(|j| !on.contains(j)).collect();
        let sub = DMatrix::from_fn(off.len(), off.len(), |a, b| sigma[(off[a], off[b])]);
        let top = if off.is_empty() {
            0.0
        } else {
            sub.clone().symmetric_eigen().eigenvalues.amax()
        };
        let search = SupportSearch {
            sigma,
            on: on.clone(),
            off,
            c0,
            inner_iters: cfg.inner_iters,
            step: if top > 0.0 { 1.0 / (2.0 * top) } else { 0.0 },
        };

        // u and -u give the same ratio, so half the sphere suffices
        let n_angles = k.saturating_sub(1);
        let g = cfg.grid;
        let mut grid_pts: Vec<Vec<f64>> = Vec::new();
        match n_angles {
            0 => grid_pts.push(Vec::new()),
            1 => grid_pts.extend((0..g).map(|a| alloc::vec![half_turn * a as f64 / g as f64])),
            _ => {
                for a in 0..=g / 2 {
                    for b in 0..2 * g {
                        grid_pts.push(alloc::vec![
                            half_turn * a as f64 / g as f64,
                            half_turn * b as f64 / g as f64
                        ]);
                    }
                }
            }
        }
        let mut local_best = (f64::INFINITY, Vec::new(), DVector::zeros(d));
        for angles in grid_pts {
            let (q, v) = search.evaluate(&sphere_point(k, &angles));
            if q < local_best.0 {
                local_best = (q, angles, v);
            }
        }
        if n_angles > 0 {
            let mut h = half_turn / g as f64;
            for _ in 0..cfg.refine_rounds {
                let mut improved = false;
                for axis in 0..n_angles {
                    for sgn in [-1.0, 1.0] {
                        let mut trial = local_best.1.clone();
                        trial[axis] += sgn * h;
                        let (q, v) = search.evaluate(&sphere_point(k, &trial));
                        if q < local_best.0 {
                            local_best = (q, trial, v);
                            improved = true;
                        }
                    }
                }
                if !improved {
                    h /= 2.0;
                }
            }
        }
        let kappa = math::sqrt(local_best.0.max(0.0));
        if best.as_ref().is_none_or(|b| kappa < b.kappa) {
            best = Some(ReEstimate {
                kappa,
                support: on,
                direction: local_best.2,
            });
        }
    }
    best.ok_or(Error::param("s", "no support to search"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MreConfig {
    pub probes: usize,
    pub seed: u64,
}

impl Default for MreConfig {
    fn default() -> Self {
        MreConfig { probes: 10_000, seed: 0 }
    }
}

fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Upper bound on the matrix restricted eigenvalue
/// `inf ||Sigma^(1/2) vec(M)|| / ||P_E(M)||_F` over rank-`<= r` matrices `E` and
/// `||P_E^perp(M)||_* <= c0 ||P_E(M)||_*`.
///
/// Each probe draws a random `E` of rank at most `r` and Gaussian `A`, `B`, then
/// evaluates `M = P_E(A) + gamma P_E^perp(B)` at `gamma = 0`, a uniform feasible
/// `gamma`, and the largest feasible `gamma`.
pub fn empirical_mre(sigma: &DMatrix<f64>, d1: usize, d2: usize, r: usize, c0: f64, cfg: &MreConfig) -> Result<ReEstimate> {
    check_sigma(sigma)?;
    if d1 > MRE_MAX_DIM || d2 > MRE_MAX_DIM {
        return Err(Error::TooLarge {
            what: "MRE search dimension",
            limit: MRE_MAX_DIM.to_string(),
            found: d1.max(d2).to_string(),
        });
    }
    if r > MRE_MAX_RANK {
        return Err(Error::TooLarge {
            what: "MRE search rank",
            limit: MRE_MAX_RANK.to_string(),
            found: r.to_string(),
        });
    }
    if d1 == 0 || d2 == 0 || r == 0 || r > d1.min(d2) {
        return Err(Error::param("r", alloc::format!("rank {r} invalid for {d1}x{d2}")));
    }
    if sigma.nrows() != d1 * d2 {
        return Err(Error::dim("Sigma", d1 * d2, sigma.nrows()));
    }
    if !(c0 >= 0.0 && c0.is_finite()) {
        return Err(Error::param("c0", "must be non-negative and finite"));
    }
    if cfg.probes == 0 {
        return Err(Error::param("probes", "must be positive"));
    }

    let mut rng = rng_from_seed(cfg.seed);
    let ratio = |m: &DMatrix<f64>, denom: f64| {
        let v = linalg::vec_of(m);
        (math::sqrt(v.dot(&(sigma * &v)).max(0.0)) / denom, v)
    };
    let mut best = (f64::INFINITY, DVector::zeros(d1 * d2));
    for _ in 0..cfg.probes {
        let rank = rng.random_range(1..=r);
        let e = gaussian_matrix(&mut rng, d1, rank) * gaussian_matrix(&mut rng, rank, d2);
        let dec = linalg::svd(&e)?;
        let u = dec.u.as_ref().expect("factors requested").columns(0, rank).into_owned();
        let v = dec.v_t.as_ref().expect("factors requested").rows(0, rank).transpose();
        let ql = DMatrix::identity(d1, d1) - &u * u.transpose();
        let qr = DMatrix::identity(d2, d2) - &v * v.transpose();
        let perp = |m: &DMatrix<f64>| &ql * m * &qr;

        let a = gaussian_matrix(&mut rng, d1, d2);
        let pa = &a - perp(&a);
        let pb = perp(&gaussian_matrix(&mut rng, d1, d2));
        let denom = pa.norm();
        if denom == 0.0 {
            continue;
        }
        let pb_nuc = linalg::nuclear_norm(&pb)?;
        let gamma_max = if pb_nuc > 0.0 {
            c0 * linalg::nuclear_norm(&pa)? / pb_nuc
        } else {
            0.0
        };
        let gamma_mid = rng.random::<f64>() * gamma_max;
        for gamma in [0.0, gamma_mid, gamma_max] {
            let (val, vecm) = ratio(&(&pa + &pb * gamma), denom);
            if val < best.0 {
                best = (val, vecm);
            }
        }
    }
    Ok(ReEstimate {
        kappa: best.0,
        support: Vec::new(),
        direction: best.1,
    })
}
