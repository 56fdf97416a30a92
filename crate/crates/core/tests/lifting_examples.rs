use rockland::exactpoly::Polynomial;
use rockland::fields::{make_standard_operator, DilationFamily, HomogeneousSystem, PolyVectorField, StandardOperator, StandardParams};
use rockland::lifting::{build_lifting, saturable_check, slice_diffeos};

fn x(n: usize, i: usize) -> Polynomial {
    Polynomial::var(n, i)
}

fn grushin() -> HomogeneousSystem {
    HomogeneousSystem::with_default_names(
        DilationFamily::new(vec![1, 2]).unwrap(),
        vec![
            PolyVectorField::coordinate(2, 0),
            PolyVectorField::new(vec![Polynomial::zero(2), x(2, 0)]).unwrap(),
        ],
    )
    .unwrap()
}

/// X1 = d1, X2 = x1 d2 + x2^2 d3 with exponents (1, 1+k, 2+3k).
fn square_chain(k: u32) -> HomogeneousSystem {
    let n = 3;
    HomogeneousSystem::with_default_names(
        DilationFamily::new(vec![1, 1 + k, 2 + 3 * k]).unwrap(),
        vec![
            PolyVectorField::coordinate(n, 0),
            PolyVectorField::new(vec![Polynomial::zero(n), x(n, 0), x(n, 1).pow(2)]).unwrap(),
        ],
    )
    .unwrap()
}

#[test]
fn square_chain_k1_structural_suite() {
    let lifted = build_lifting(&square_chain(1)).unwrap();
    // Hand brackets: X1, X2, [X1,X2] = d2, [X2,[X1,X2]] = -2 x2 d3,
    // then two more brackets reach the constant field d3.
    assert_eq!(lifted.big_n(), 6);
    assert_eq!(lifted.p(), 3);
    assert_eq!(lifted.algebra().degrees(), &[1, 1, 2, 3, 4, 5]);
    assert_eq!(lifted.algebra().step(), 5);
    for c in lifted.structural_checks(3).unwrap() {
        assert!(c.passed, "{}: {}", c.name, c.detail);
    }
    let maps = slice_diffeos(&lifted).unwrap();
    for c in maps.check(&lifted).unwrap() {
        assert!(c.passed, "{}: {}", c.name, c.detail);
    }
}

#[test]
fn grushin_operators_are_saturable() {
    let sys = grushin();
    let lifted = build_lifting(&sys).unwrap();
    assert_eq!(lifted.big_q(), 4);
    for (kind, nu0) in [(StandardOperator::SublaplacianPower, 1), (StandardOperator::SumOfEvenPowers, 2)] {
        let op = make_standard_operator(kind, sys.degrees(), &StandardParams { nu0, k: 1, drift: None }).unwrap();
        let rep = saturable_check(&op, &lifted).unwrap();
        assert!(!rep.terms.is_empty());
        assert!(rep.passed(), "{kind:?}");
    }
}
