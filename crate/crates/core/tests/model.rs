mod common;

use common::*;
use hubreg_core::model::Covariate;
use hubreg_core::{trace_inner, DMatrix, DVector, Error, MaskEntry, RegressionProblem, Sign, TraceDesign, TraceProblem};
use proptest::prelude::*;

#[test]
fn trace_inner_examples() {
    let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(trace_inner(Covariate::Dense(&DMatrix::identity(2, 2)), &b).unwrap(), 5.0);
    assert_eq!(trace_inner(Covariate::Dense(&DMatrix::zeros(2, 2)), &b).unwrap(), 0.0);

    let mut b4 = DMatrix::zeros(4, 4);
    b4[(0, 1)] = 0.5;
    let e = MaskEntry { row: 0, col: 1, sign: Sign::Minus };
    assert_eq!(trace_inner(Covariate::Mask(e, (4, 4)), &b4).unwrap(), -2.0);

    let err = trace_inner(Covariate::Dense(&DMatrix::zeros(3, 2)), &b).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("3x2") && msg.contains("2x2"), "{msg}");
}

proptest! {
    #[test]
    fn mask_matches_densified(seed in 0u64..1000, row in 0usize..5, col in 0usize..3, plus in any::<bool>()) {
        let mut r = rng(seed);
        let b = gauss_mat(&mut r, 5, 3);
        let e = MaskEntry { row, col, sign: if plus { Sign::Plus } else { Sign::Minus } };
        let cov = Covariate::Mask(e, (5, 3));
        let dense = cov.to_dense();
        prop_assert_eq!(trace_inner(cov, &b).unwrap(), trace_inner(Covariate::Dense(&dense), &b).unwrap());
    }

    #[test]
    fn trace_inner_bilinear(seed in 0u64..1000, a in -5f64..5.0, c in -5f64..5.0) {
        let mut r = rng(seed);
        let x = gauss_mat(&mut r, 3, 4);
        let b1 = gauss_mat(&mut r, 3, 4);
        let b2 = gauss_mat(&mut r, 3, 4);
        let lhs = trace_inner(Covariate::Dense(&x), &(&b1 * a + &b2 * c)).unwrap();
        let rhs = a * trace_inner(Covariate::Dense(&x), &b1).unwrap() + c * trace_inner(Covariate::Dense(&x), &b2).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }
}

#[test]
fn validate_examples() {
    let mut r = rng(1);
    let p = RegressionProblem::new(gauss_vec(&mut r, 10), gauss_mat(&mut r, 10, 3));
    assert!(p.clone().validated().is_ok());

    let bad = RegressionProblem::new(gauss_vec(&mut r, 9), gauss_mat(&mut r, 10, 3));
    assert!(matches!(bad.validate(), Err(Error::Dimension { .. })));

    let mut theta = DVector::zeros(10);
    theta[4] = 1.0;
    let mut inconsistent = p;
    inconsistent.theta_true = Some(theta);
    inconsistent.outlier_index_set = Some(vec![2]);
    match inconsistent.validate() {
        Err(Error::Inconsistent { index, .. }) => assert!(index == 4 || index == 2),
        other => panic!("expected consistency error, got {other:?}"),
    }
}

#[test]
fn validate_rejects_bad_masks_and_non_finite() {
    let p = TraceProblem::new(
        DVector::zeros(1),
        TraceDesign::Mask(vec![MaskEntry { row: 2, col: 0, sign: Sign::Plus }]),
        2,
        2,
    );
    assert!(p.validate().is_err());
    let mut r = rng(2);
    let mut x = gauss_mat(&mut r, 4, 2);
    x[(3, 1)] = f64::NAN;
    match RegressionProblem::new(DVector::zeros(4), x).validate() {
        Err(Error::NonFinite { index, .. }) => assert_eq!(index, 7),
        other => panic!("{other:?}"),
    }
}
