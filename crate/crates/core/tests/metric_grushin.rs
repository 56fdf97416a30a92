use rockland::exactpoly::Polynomial;
use rockland::fields::{DilationFamily, HomogeneousSystem, PolyVectorField};
use rockland::metric::{ControlMetric, DistanceConfig};

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

#[test]
fn hand_computed_distances() {
    let m = ControlMetric::new(&grushin(), DistanceConfig::default()).unwrap();
    // Only X1 moves x1, at speed at most δ: d((0,0),(1,0)) = 1.
    let d = m.distance(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
    assert!((d.upper - 1.0).abs() <= 1e-3, "{d:?}");
    assert!(d.lower <= 1.0 + 1e-12);
    // Reaching (0, 1) means a loop in x1 with |x1| ≤ δ·t and x2 gained at
    // rate δ·x1; the best loop over unit time gives δ²/4 = 1, so δ = 2.
    let d = m.distance(&[0.0, 0.0], &[0.0, 1.0]).unwrap();
    assert!((d.upper - 2.0).abs() <= 2e-3, "{d:?}");
}

#[test]
fn distance_scales_and_satisfies_triangle_inequality() {
    let m = ControlMetric::new(&grushin(), DistanceConfig::default()).unwrap();
    let y = [0.3, -0.7];
    let d = m.distance(&[0.0, 0.0], &y).unwrap().upper;
    let d2 = m.distance(&[0.0, 0.0], &[0.6, -2.8]).unwrap().upper;
    assert!((d2 / d - 2.0).abs() <= 4e-3, "{d} {d2}");
    let via = m.distance(&[0.0, 0.0], &[1.0, 0.0]).unwrap().upper + m.distance(&[1.0, 0.0], &y).unwrap().upper;
    assert!(d <= via * (1.0 + 2e-3));
}

#[test]
fn origin_volume_scales_exactly() {
    let m = ControlMetric::new(&grushin(), DistanceConfig::default()).unwrap();
    let a = m.ball_volume(&[0.0, 0.0], 0.5, 200, 7).unwrap();
    let b = m.ball_volume(&[0.0, 0.0], 1.0, 200, 7).unwrap();
    assert_eq!(a.hits, b.hits);
    assert!((b.estimate / a.estimate - 8.0).abs() < 1e-9);
    assert!(b.hits > 0 && b.estimate <= b.box_volume);
}
