use approx::assert_relative_eq;
use hypowave_core::frames::{lie_bracket, momentum_gradients, momentum_map, poisson_bracket, Exponent};
use hypowave_core::nilpotent::{dilate_vf, graded_parts};
use hypowave_core::{PhasePoint, Poly, PolyVectorField};
use proptest::prelude::*;

const N: usize = 3;

/// Fields with integer coefficients and degree ≤ 2, so brackets are exact in floating point.
fn field() -> impl Strategy<Value = PolyVectorField> {
    let term = (0u32..3, 0u32..3, 0u32..2, -3i32..=3);
    prop::collection::vec(prop::collection::vec(term, 0..4), N).prop_map(|comps| {
        PolyVectorField::new(
            comps
                .into_iter()
                .map(|ts| Poly::from_terms(N, ts.into_iter().map(|(a, b, c, k)| (vec![a, b, c] as Exponent, k as f64))))
                .collect(),
        )
    })
}

fn point() -> impl Strategy<Value = PhasePoint> {
    (prop::collection::vec(-1.0f64..1.0, N), prop::collection::vec(-2.0f64..2.0, N)).prop_map(|(x, xi)| PhasePoint::new(x, xi))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_antisymmetric(a in field(), b in field()) {
        let ab = lie_bracket(&a, &b).unwrap();
        let ba = lie_bracket(&b, &a).unwrap();
        prop_assert!(ab.add(&ba).is_zero());
    }

    #[test]
    fn jacobi_identity(a in field(), b in field(), c in field()) {
        let br = |u: &PolyVectorField, v: &PolyVectorField| lie_bracket(u, v).unwrap();
        let sum = br(&a, &br(&b, &c)).add(&br(&b, &br(&c, &a))).add(&br(&c, &br(&a, &b)));
        prop_assert!(sum.max_abs_coeff() == 0.0, "residual {}", sum.max_abs_coeff());
    }

    #[test]
    fn poisson_bracket_of_momenta_is_momentum_of_bracket(a in field(), b in field(), p in point()) {
        let pb = poisson_bracket(&momentum_gradients(&a, &p).unwrap(), &momentum_gradients(&b, &p).unwrap());
        let h = momentum_map(&lie_bracket(&a, &b).unwrap(), &p).unwrap();
        assert_relative_eq!(pb, h, epsilon = 1e-10, max_relative = 1e-12);
    }

    #[test]
    fn graded_parts_reassemble_and_scale_homogeneously(a in field(), eps in 0.1f64..1.0) {
        let w = [1, 1, 2];
        let parts = graded_parts(&a, &w);
        prop_assert_eq!(parts.reassemble(N), a.clone());
        let dilated = dilate_vf(&a, eps, &w).unwrap();
        let expected = parts.parts.iter().fold(PolyVectorField::zero(N), |acc, (d, f)| acc.add(&f.scale(eps.powi(*d as i32))));
        prop_assert!(dilated.sub(&expected).max_abs_coeff() <= 1e-12);
    }
}
