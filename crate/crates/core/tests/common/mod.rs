#![allow(dead_code)]

use hubreg_core::datagen::{rng_from_seed, Rng64};
use hubreg_core::{DMatrix, DVector, MaskEntry, RegressionProblem, Sign, TraceDesign, TraceProblem};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> Rng64 {
    rng_from_seed(seed)
}

pub fn gauss_vec(rng: &mut Rng64, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn gauss_mat(rng: &mut Rng64, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// Regression problem with a few gross outliers so both Huber branches are active.
pub fn random_regression(rng: &mut Rng64, n: usize, d: usize) -> RegressionProblem {
    let x = gauss_mat(rng, n, d);
    let beta = gauss_vec(rng, d);
    let mut y = &x * &beta + gauss_vec(rng, n) * 0.5;
    for i in 0..n.div_ceil(5) {
        y[i * 5 % n] += 25.0;
    }
    RegressionProblem::new(y, x)
}

pub fn random_dense_trace(rng: &mut Rng64, n: usize, d1: usize, d2: usize) -> TraceProblem {
    let xs: Vec<DMatrix<f64>> = (0..n).map(|_| gauss_mat(rng, d1, d2)).collect();
    let b = gauss_mat(rng, d1, d2);
    let mut y = DVector::from_fn(n, |i, _| xs[i].dot(&b));
    y += gauss_vec(rng, n) * 0.5;
    for i in 0..n.div_ceil(5) {
        y[i * 5 % n] -= 30.0;
    }
    TraceProblem::new(y, TraceDesign::Dense(xs), d1, d2)
}

pub fn random_mask_trace(rng: &mut Rng64, n: usize, d1: usize, d2: usize) -> TraceProblem {
    let entries: Vec<MaskEntry> = (0..n)
        .map(|_| MaskEntry {
            row: rng.random_range(0..d1),
            col: rng.random_range(0..d2),
            sign: if rng.random::<bool>() { Sign::Plus } else { Sign::Minus },
        })
        .collect();
    let y = gauss_vec(rng, n) * 3.0;
    TraceProblem::new(y, TraceDesign::Mask(entries), d1, d2)
}

/// Largest relative error between two vectors, normalised by the larger magnitude.
pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / scale).fold(0.0, f64::max)
}
