//! Property tests for the c.f. algebra invariants.

use geomid::cf::{
    geometric_compound_cf, gv_invert, gv_transform, id_cf, un_cf, ExponentDescriptor,
    ALGEBRAIC_TOL,
};
use geomid::grid::GridSpec;
use geomid::numerics::{empirical_cf, ks_statistic};
use geomid::samplers::{BatchMeta, SampleBatch};
use proptest::prelude::*;

fn descriptor_strategy() -> impl Strategy<Value = ExponentDescriptor> {
    let gaussian = (0.01f64..4.0).prop_map(|c| ExponentDescriptor::gaussian(c).unwrap());
    let stable = (0.05f64..=2.0, 0.01f64..4.0)
        .prop_map(|(a, c)| ExponentDescriptor::stable(a, c).unwrap());
    let semi = (0.05f64..=2.0, 0.05f64..0.95, 0.0f64..=0.1, 0.01f64..4.0)
        .prop_map(|(a, b, e, c)| ExponentDescriptor::semi_stable(a, b, e, c).unwrap());
    prop_oneof![gaussian, stable, semi]
}

fn batch_of(values: Vec<f64>) -> SampleBatch {
    SampleBatch {
        meta: BatchMeta { law: "test".into(), params: vec![], seed: 0, substream: 0, size: values.len() },
        values,
    }
}

proptest! {
    #[test]
    fn gv_round_trip(desc in descriptor_strategy(), t in -10.0f64..10.0) {
        let phi = gv_transform(&desc);
        let g = gv_invert(&phi, t).unwrap();
        let direct = desc.eval(t).unwrap();
        prop_assert!((g - direct).norm() <= ALGEBRAIC_TOL,
            "round trip defect {} at t = {t}", (g - direct).norm());
    }

    #[test]
    fn compounding_matches_scaled_exponent(
        desc in descriptor_strategy(),
        t in -10.0f64..10.0,
        p_idx in 0usize..3,
    ) {
        // geometric(p) compounding of 1/(1+g) equals 1/(1+g/p)
        let p = [0.1, 0.5, 0.9][p_idx];
        let compounded = geometric_compound_cf(p, &gv_transform(&desc)).unwrap();
        let g = desc.eval_real(t).unwrap();
        let expected = 1.0 / (1.0 + g / p);
        let got = compounded.eval(t).unwrap();
        prop_assert!((got.re - expected).abs() <= ALGEBRAIC_TOL);
        prop_assert!(got.im.abs() <= ALGEBRAIC_TOL);
    }

    #[test]
    fn produced_cfs_are_hermitian_contractions(
        desc in descriptor_strategy(),
        t in -30.0f64..30.0,
        n in 1u64..10_000,
    ) {
        for phi in [gv_transform(&desc), id_cf(&desc), un_cf(&desc, n).unwrap()] {
            let v = phi.eval(t).unwrap();
            let w = phi.eval(-t).unwrap();
            prop_assert!(v.norm() <= 1.0 + ALGEBRAIC_TOL);
            prop_assert!((w - v.conj()).norm() <= ALGEBRAIC_TOL);
            prop_assert_eq!(phi.eval(0.0).unwrap().re, 1.0);
        }
    }

    #[test]
    fn empirical_cf_is_hermitian_contraction(
        values in prop::collection::vec(-100.0f64..100.0, 1..50),
        t in -20.0f64..20.0,
    ) {
        let grid = GridSpec::new(-1.0, 1.0, 0.5).unwrap();
        let phi = empirical_cf(&batch_of(values), &grid).unwrap();
        let v = phi.eval(t).unwrap();
        prop_assert!(v.norm() <= 1.0 + ALGEBRAIC_TOL);
        prop_assert_eq!(phi.eval(-t).unwrap(), v.conj());
        prop_assert_eq!(phi.eval(0.0).unwrap().re, 1.0);
    }

    #[test]
    fn ks_invariant_under_affine_maps(
        values in prop::collection::vec(-50.0f64..50.0, 1..60),
        scale in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let logistic = |x: f64| 1.0 / (1.0 + (-x).exp());
        let base = ks_statistic(&batch_of(values.clone()), |x| logistic(scale * x + shift)).unwrap();
        let mapped: Vec<f64> = values.iter().map(|&x| scale * x + shift).collect();
        let moved = ks_statistic(&batch_of(mapped), logistic).unwrap();
        prop_assert_eq!(base, moved);
    }
}
