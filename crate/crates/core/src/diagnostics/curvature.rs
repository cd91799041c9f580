use nalgebra::{DMatrix, DVector};

use crate::error::{shape, Error, Result};
use crate::math;
use crate::penalties::{huber_grad, HuberScale};

/// Left side of the restricted curvature inequality for the Huber loss along
/// `direction`:
///
/// ```text
/// lambda_o^2 sum_i { -h((xi_i - v_i)/c) + h(xi_i/c) } v_i / c,   v_i = <x_i, direction>
/// ```
///
/// with `c = lambda_o sqrt(n)`. It is the first-order change of the data term
/// between the truth and `truth + direction`.
pub fn restricted_curvature(x: &DMatrix<f64>, noise: &DVector<f64>, direction: &DVector<f64>, scale: HuberScale) -> Result<f64> {
    if x.nrows() != noise.len() {
        return Err(Error::dim("noise", x.nrows(), noise.len()));
    }
    if x.ncols() != direction.len() {
        return Err(Error::dim("direction", shape(x.ncols(), 1), shape(direction.len(), 1)));
    }
    let c = scale.get();
    let lambda_o_sq = c * c / x.nrows() as f64;
    let v = x * direction;
    Ok(lambda_o_sq
        * noise
            .iter()
            .zip(v.iter())
            .map(|(xi, vi)| (huber_grad(xi / c) - huber_grad((xi - vi) / c)) * vi / c)
            .sum::<f64>())
}

/// Slack of the curvature inequality,
/// `C (complexity + sqrt(8 log(1/delta)/n)) t + 5 log(1/delta)/n` with `t = ||Sigma^(1/2) direction||`.
///
/// `complexity` is the dimension term, e.g. `L rho c_kappa sqrt(s log(d/s)/n)`.
pub fn curvature_slack(complexity: f64, delta: f64, n: usize, t: f64, c: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", "must lie in (0, 1)"));
    }
    if n == 0 {
        return Err(Error::param("n", "must be positive"));
    }
    let log_inv = math::ln(1.0 / delta);
    let nf = n as f64;
    Ok(c * (complexity + math::sqrt(8.0 * log_inv / nf)) * t + 5.0 * log_inv / nf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_regime_matches_least_squares() {
        // all residuals inside the quadratic zone: lhs = (1/n) ||X v||^2
        let x = DMatrix::from_fn(6, 2, |i, j| ((i + 2 * j) % 3) as f64 - 1.0);
        let noise = DVector::from_element(6, 0.1);
        let dir = DVector::from_vec(alloc::vec![0.2, -0.1]);
        let lhs = restricted_curvature(&x, &noise, &dir, HuberScale::new(100.0).unwrap()).unwrap();
        let expect = (&x * &dir).norm_squared() / 6.0;
        assert!((lhs - expect).abs() < 1e-14);
    }
}
