use std::sync::Arc;

use rockland::exactpoly::Polynomial;
use rockland::fields::{make_standard_operator, DilationFamily, HomogeneousSystem, MultiIndex, OperatorSpec, PolyVectorField, StandardOperator, StandardParams};
use rockland::fundsol::{kernel_calibrate, lifted_identity, HeisenbergGauge, SaturationEvaluator};
use rockland::lifting::build_lifting;
use rockland::quadrature::QuadratureConfig;

fn setup() -> (SaturationEvaluator, OperatorSpec) {
    let sys = HomogeneousSystem::with_default_names(
        DilationFamily::new(vec![1, 2]).unwrap(),
        vec![
            PolyVectorField::coordinate(2, 0),
            PolyVectorField::new(vec![Polynomial::zero(2), Polynomial::var(2, 0)]).unwrap(),
        ],
    )
    .unwrap();
    let op = make_standard_operator(StandardOperator::SublaplacianPower, sys.degrees(), &StandardParams { nu0: 1, k: 1, drift: None }).unwrap();
    let lifted = build_lifting(&sys).unwrap();
    let shape = Arc::new(HeisenbergGauge::for_lift(&lifted, &op).unwrap());
    let cal = QuadratureConfig::new(1e-6, 1e-12, 2000).unwrap();
    let (k, rep) = kernel_calibrate(shape, &lifted, &op, &cal).unwrap();
    assert!(rep.annihilation_residual.unwrap() < 1e-12);
    for pole in [[0.5, -0.3, 0.2], [1.0, 1.0, -1.0], [-0.7, 0.4, 1.5]] {
        let r = lifted_identity(&k, &lifted, &op, &pole, 1.0, &cal).unwrap();
        assert!(r.residual <= 1e-3, "pole {pole:?}: {r:?}");
    }
    let ev = SaturationEvaluator::new(lifted, k, 2, QuadratureConfig::new(1e-11, 1e-15, 400).unwrap()).unwrap();
    (ev, op)
}

#[test]
fn sublaplacian_kernel_identities() {
    let (ev, op) = setup();
    let pairs = vec![(vec![1.0, 0.5], vec![-0.3, 0.2]), (vec![0.2, -1.0], vec![0.7, 0.3])];
    for (x, y) in &pairs {
        // Normalized by LΓ = -δ; for a sum of squares that makes Γ positive.
        assert!(ev.gamma_eval(x, y).unwrap().value > 0.0);
    }
    assert!(ev.verify_homogeneity(&[], &pairs, &[0.5, 2.0, 4.0]).unwrap() <= 1e-6);
    let s = ev.symmetry_check(&pairs).unwrap();
    assert!(s.swapped_max_rel <= 1e-5 && s.transposed_max_rel <= 1e-5, "{s:?}");

    // X1 = d1, so a central difference in x1 follows the exact flow.
    let (x, y) = ([1.0, 0.5], [-0.3, 0.2]);
    let d = ev.gamma_x_derivative(&MultiIndex(vec![0]), &x, &y).unwrap().value;
    let central = |h: f64| (ev.gamma_eval(&[x[0] + h, x[1]], &y).unwrap().value - ev.gamma_eval(&[x[0] - h, x[1]], &y).unwrap().value) / (2.0 * h);
    let fd = (4.0 * central(5e-3) - central(1e-2)) / 3.0;
    assert!((d - fd).abs() <= 1e-4 * fd.abs(), "{d} {fd}");

    let li = ev.verify_left_inverse(&op, &[1.0, 0.0], 1.0, &QuadratureConfig::new(1e-5, 1e-9, 400).unwrap()).unwrap();
    assert!(li.residual <= 5e-3, "{li:?}");
}
