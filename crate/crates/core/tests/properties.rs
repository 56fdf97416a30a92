use proptest::prelude::*;
use rockland::exactpoly::{int, rat, Polynomial, Rational};
use rockland::fields::{certify_homogeneity, commutator, field_apply, operator_transpose, DiffOperator, DilationFamily, HomogeneousSystem, MultiIndex, OperatorSpec, PolyVectorField};
use rockland::lifting::build_lifting;
use rockland::quadrature::{integrate_box, PolyBump, QuadratureConfig};

const N: usize = 3;

fn poly() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((prop::collection::vec(0u32..3, N), -4i64..5, 1i64..4), 0..5)
        .prop_map(|terms| Polynomial::from_terms(N, terms.into_iter().map(|(e, a, b)| (e, rat(a, b)))).unwrap())
}

fn field() -> impl Strategy<Value = PolyVectorField> {
    prop::collection::vec(poly(), N).prop_map(|c| PolyVectorField::new(c).unwrap())
}

/// `c x^α ∂_i` with `σ·α < σ_i` under `σ = (1, 2, 3)`, so the degree is
/// positive.
fn homogeneous_monomial_field() -> impl Strategy<Value = PolyVectorField> {
    (0usize..N, prop::collection::vec(0u32..3, N), 1i64..4).prop_filter_map("degree must be positive", |(i, alpha, c)| {
        let sigma = [1u32, 2, 3];
        let w: u32 = alpha.iter().zip(&sigma).map(|(a, s)| a * s).sum();
        if w >= sigma[i] {
            return None;
        }
        let mut coeffs = vec![Polynomial::zero(N); N];
        coeffs[i] = Polynomial::monomial(alpha, int(c));
        Some(PolyVectorField::new(coeffs).unwrap())
    })
}

fn grushin() -> HomogeneousSystem {
    HomogeneousSystem::with_default_names(
        DilationFamily::new(vec![1, 2]).unwrap(),
        vec![
            PolyVectorField::coordinate(2, 0),
            PolyVectorField::new(vec![Polynomial::zero(2), Polynomial::var(2, 0)]).unwrap(),
        ],
    )
    .unwrap()
}

/// Homogeneous second-order operators in two degree-one fields.
fn second_order_operator() -> impl Strategy<Value = OperatorSpec> {
    prop::collection::vec(((0usize..2, 0usize..2), -3i64..4), 1..5).prop_map(|terms| {
        OperatorSpec::new(terms.into_iter().map(|((a, b), c)| (int(c), MultiIndex(vec![a, b]))), &[1, 1]).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn polynomial_ring_laws(a in poly(), b in poly(), c in poly()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn fields_are_derivations(x in field(), u in poly(), v in poly()) {
        let lhs = field_apply(&x, &(&u * &v)).unwrap();
        let rhs = &(&field_apply(&x, &u).unwrap() * &v) + &(&u * &field_apply(&x, &v).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn jacobi_identity(x in field(), y in field(), z in field()) {
        let a = commutator(&x, &commutator(&y, &z).unwrap()).unwrap();
        let b = commutator(&y, &commutator(&z, &x).unwrap()).unwrap();
        let c = commutator(&z, &commutator(&x, &y).unwrap()).unwrap();
        prop_assert!(a.add(&b).unwrap().add(&c).unwrap().is_zero());
    }

    #[test]
    fn bracket_degrees_add(x in homogeneous_monomial_field(), y in homogeneous_monomial_field()) {
        let delta = DilationFamily::new(vec![1, 2, 3]).unwrap();
        let dx = certify_homogeneity(&x, &delta).unwrap();
        let dy = certify_homogeneity(&y, &delta).unwrap();
        let b = commutator(&x, &y).unwrap();
        if !b.is_zero() {
            prop_assert_eq!(certify_homogeneity(&b, &delta), Some(dx + dy));
        }
    }

    #[test]
    fn transpose_is_an_involution(op in second_order_operator()) {
        let sys = grushin();
        let t = operator_transpose(&op, sys.fields(), sys.degrees()).unwrap();
        prop_assert_eq!(operator_transpose(&t, sys.fields(), sys.degrees()).unwrap(), op);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// `∫ (Lu) v = ∫ u (L*v)` for bumps, by quadrature.
    #[test]
    fn transpose_matches_integration_by_parts(
        op in second_order_operator(),
        cu in prop::array::uniform2(-0.3f64..0.3),
        cv in prop::array::uniform2(-0.3f64..0.3),
    ) {
        let sys = grushin();
        let t = operator_transpose(&op, sys.fields(), sys.degrees()).unwrap();
        let u = PolyBump::new(&cu, &[1.0, 1.0], 4).unwrap().polynomial();
        let v = PolyBump::new(&cv, &[1.0, 1.0], 4).unwrap().polynomial();
        let lu = DiffOperator::from_operator(sys.fields(), &op).apply(&u).unwrap().compile();
        let ltv = DiffOperator::from_operator(sys.fields(), &t).apply(&v).unwrap().compile();
        let (u, v) = (u.compile(), v.compile());
        let lo = [cu[0].max(cv[0]) - 1.0, cu[1].max(cv[1]) - 1.0];
        let hi = [cu[0].min(cv[0]) + 1.0, cu[1].min(cv[1]) + 1.0];
        let cfg = QuadratureConfig::new(1e-10, 1e-14, 200).unwrap();
        let a = integrate_box(&|x| lu.eval(x) * v.eval(x), &lo, &hi, &cfg).value;
        let b = integrate_box(&|x| u.eval(x) * ltv.eval(x), &lo, &hi, &cfg).value;
        let scale = integrate_box(&|x| (lu.eval(x) * v.eval(x)).abs(), &lo, &hi, &cfg).value;
        prop_assert!((a - b).abs() <= 1e-8 * scale.max(1e-12), "{} vs {}", a, b);
    }

    #[test]
    fn group_law_is_associative(
        a in prop::array::uniform3(-2.0f64..2.0),
        b in prop::array::uniform3(-2.0f64..2.0),
        c in prop::array::uniform3(-2.0f64..2.0),
    ) {
        let lifted = build_lifting(&grushin()).unwrap();
        let law = lifted.law();
        let l = law.multiply_f64(&law.multiply_f64(&a, &b), &c);
        let r = law.multiply_f64(&a, &law.multiply_f64(&b, &c));
        for (x, y) in l.iter().zip(&r) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
        let e = law.multiply_f64(&a, &law.invert_f64(&a));
        prop_assert!(e.iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn lift_identity_holds(seed in any::<u64>(), op in second_order_operator()) {
        let lifted = build_lifting(&grushin()).unwrap();
        let check = lifted.lift_identity_suite(&op, 5, seed).unwrap();
        prop_assert!(check.passed, "{}", check.detail);
    }
}

#[test]
fn exact_group_law_is_associative() {
    let lifted = build_lifting(&grushin()).unwrap();
    let law = lifted.law();
    let pts: Vec<Vec<Rational>> = vec![vec![rat(1, 2), int(-3), rat(7, 5)], vec![int(2), rat(-1, 3), int(1)], vec![rat(-5, 4), int(0), rat(2, 9)]];
    let l = law.multiply_exact(&law.multiply_exact(&pts[0], &pts[1]).unwrap(), &pts[2]).unwrap();
    let r = law.multiply_exact(&pts[0], &law.multiply_exact(&pts[1], &pts[2]).unwrap()).unwrap();
    assert_eq!(l, r);
}
