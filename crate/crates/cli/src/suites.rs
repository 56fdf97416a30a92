//! Named check suites over a loaded model. Each suite returns [`Check`]
//! records; the command line aggregates them into reports.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rockland::exactpoly::{int, CompiledPoly, Polynomial, Rational};
use rockland::fields::{classify_positive_rockland_pattern, heat_extend, operator_transpose, MultiIndex, OperatorSpec, PolyVectorField};
use rockland::fundsol::{kernel_calibrate, lifted_identity, CalibrationReport, HeisenbergGauge, KernelShape, SaturationEvaluator};
use rockland::liealg::{generate_lie_algebra, hormander_rank};
use rockland::lifting::{build_lifting, lie_series_map, saturable_check, slice_diffeos, LiftedSystem};
use rockland::metric::{estimate_scan, BracketVolume, ControlMetric, DistanceConfig, ScanPair, VolumeTable};
use rockland::quadrature::QuadratureConfig;
use rockland::{Error, Result};
use serde::Serialize;

use crate::dsl::Model;
use crate::report::Check;

/// Numeric settings shared by the suites. Recorded verbatim in reports.
#[derive(Clone, Debug, Serialize)]
pub struct Settings {
    pub seed: u64,
    /// Relative tolerance of each saturation integral.
    pub gamma_tol: f64,
    /// Relative tolerance of the calibration and pole-identity integrals.
    pub calibration_tol: f64,
    /// Relative bracket width of distance bisection.
    pub distance_tol: f64,
    /// Monte Carlo samples per ball volume.
    pub samples: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            seed: 1,
            gamma_tol: 1e-10,
            calibration_tol: 1e-6,
            distance_tol: 1e-3,
            samples: 400,
        }
    }
}

fn boolean(name: &str, ok: bool) -> Check {
    Check::boolean(name, ok, None)
}

fn seeded(name: &str, residual: f64, tolerance: f64, seed: u64) -> Check {
    Check::measured(name, residual, tolerance, Some(seed))
}

#[derive(Clone, Debug, Serialize)]
pub struct RankRow {
    pub point: Vec<String>,
    pub rank: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Analysis {
    pub n: usize,
    pub sigma: Vec<u32>,
    pub names: Vec<String>,
    pub degrees: Vec<u32>,
    pub q: u32,
    pub big_n: usize,
    pub p: usize,
    pub step: usize,
    pub big_q: u32,
    pub operator_degree: Option<u32>,
    pub rank_table: Vec<RankRow>,
}

/// Degrees, dimensions and the rank of the generated Lie algebra at a few
/// points.
pub fn analyze(model: &Model) -> Result<Analysis> {
    let sys = &model.system;
    let n = sys.dim();
    let alg = generate_lie_algebra(sys)?;
    let mut points: Vec<Vec<Rational>> = vec![vec![int(0); n], vec![int(1); n]];
    let mut e1 = vec![int(0); n];
    e1[0] = int(1);
    points.push(e1);
    let rank_table = points
        .into_iter()
        .map(|p| {
            Ok(RankRow {
                rank: hormander_rank(alg.basis(), &p)?,
                point: p.iter().map(|c| c.to_string()).collect(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(Analysis {
        n,
        sigma: sys.dilation().sigma().to_vec(),
        names: sys.names().to_vec(),
        degrees: sys.degrees().to_vec(),
        q: sys.homogeneous_dimension(),
        big_n: alg.dim(),
        p: alg.dim() - n,
        step: alg.step(),
        big_q: alg.degrees().iter().sum(),
        operator_degree: model.operator.as_ref().map(|o| o.degree()),
        rank_table,
    })
}

/// The operator used by checks that need one: the model's, or `X_1`.
fn operator_or_first(model: &Model) -> Result<OperatorSpec> {
    match &model.operator {
        Some(op) => Ok(op.clone()),
        None => OperatorSpec::new([(int(1), MultiIndex(vec![0]))], model.system.degrees()),
    }
}

/// Group axioms, dilations, lifted fields, residuals, lift identity on 20
/// random polynomials and the slice diffeomorphisms.
pub fn lifting_checks(model: &Model, seed: u64) -> Result<(LiftedSystem, Vec<Check>)> {
    let lifted = build_lifting(&model.system)?;
    let mut checks: Vec<Check> = lifted
        .structural_checks(seed)?
        .into_iter()
        .map(|c| Check::boolean(format!("lifting/{}", c.name), c.passed, Some(seed)))
        .collect();
    let op = operator_or_first(model)?;
    let li = lifted.lift_identity_suite(&op, 20, seed)?;
    checks.push(Check::boolean(format!("lifting/{}", li.name), li.passed, Some(seed)));
    let maps = slice_diffeos(&lifted)?;
    for c in maps.check(&lifted)? {
        checks.push(boolean(&format!("lifting/{}", c.name), c.passed));
    }
    Ok((lifted, checks))
}

/// Every summand of the residual operator differentiates in `ξ` with the
/// allowed `ξ`-degree.
pub fn saturable_checks(model: &Model, lifted: &LiftedSystem) -> Result<Vec<Check>> {
    let op = model
        .operator
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("the saturable check needs an operator".into()))?;
    let rep = saturable_check(op, lifted)?;
    Ok(vec![
        boolean("saturable/acts_in_xi", rep.acts_in_xi),
        boolean("saturable/xi_degree_bound", rep.degree_bound),
        boolean("saturable/all_terms", rep.terms.iter().all(|t| t.ok)),
    ])
}

/// The operator, if a homogeneous fundamental solution can exist for it:
/// its degree must be below the homogeneous dimension.
pub fn existence_gate(model: &Model) -> Result<&OperatorSpec> {
    let op = model
        .operator
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("the model declares no operator".into()))?;
    let q = model.system.homogeneous_dimension();
    if op.degree() >= q {
        return Err(Error::ExistenceHypothesis { nu: op.degree(), q });
    }
    Ok(op)
}

/// Kernel selection and calibration. Refuses operators with `ν ≥ q` before
/// anything else is attempted.
pub fn evaluator(model: &Model, lifted: Option<LiftedSystem>, settings: &Settings) -> Result<(SaturationEvaluator, CalibrationReport)> {
    let op = existence_gate(model)?;
    let lifted = match lifted {
        Some(l) => l,
        None => build_lifting(&model.system)?,
    };
    let kernel = model.spec.kernel.as_deref().unwrap_or("heisenberg_gauge");
    let shape: Arc<dyn KernelShape> = match kernel {
        "heisenberg_gauge" => Arc::new(HeisenbergGauge::for_lift(&lifted, op)?),
        other => return Err(Error::KernelUnavailable(format!("unknown kernel {other}"))),
    };
    let cal = QuadratureConfig::new(settings.calibration_tol, 1e-12, 2000)?;
    let (k, rep) = kernel_calibrate(shape, &lifted, op, &cal)?;
    let ev = SaturationEvaluator::new(lifted, k, op.degree(), QuadratureConfig::new(settings.gamma_tol, 1e-15, 400)?)?;
    Ok((ev, rep))
}

/// Seeded off-diagonal pairs in `[−2, 2]^n`.
pub fn sample_pairs(n: usize, count: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let gap = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if gap > 0.1 {
            out.push((x, y));
        }
    }
    out
}

/// Calibration at three poles, joint homogeneity, symmetry, left inverse
/// and tail doubling.
pub fn fundsol_checks(model: &Model, ev: &SaturationEvaluator, settings: &Settings) -> Result<Vec<Check>> {
    let op = model.operator.as_ref().expect("evaluator implies an operator");
    let lifted = ev.lifted();
    let seed = settings.seed;
    let mut checks = Vec::new();
    let cal = QuadratureConfig::new(settings.calibration_tol, 1e-12, 2000)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9013);
    for k in 0..3 {
        let pole: Vec<f64> = (0..lifted.big_n()).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let r = lifted_identity(ev.kernel(), lifted, op, &pole, 1.0, &cal)?;
        checks.push(seeded(&format!("fundsol/calibration_pole_{}", k + 1), r.residual, 1e-3, seed));
    }
    let pairs = sample_pairs(lifted.n(), 10, seed);
    let h = ev.verify_homogeneity(&[], &pairs, &[0.5, 2.0, 4.0])?;
    checks.push(seeded("fundsol/joint_homogeneity", h, 1e-6, seed));
    let sym = ev.symmetry_check(&pairs)?;
    let lt = operator_transpose(op, lifted.base_fields(), lifted.degrees())?;
    if &lt == op {
        checks.push(seeded("fundsol/symmetry", sym.swapped_max_rel, 1e-5, seed));
    }
    checks.push(seeded("fundsol/transpose_symmetry", sym.transposed_max_rel, 1e-5, seed));
    let y: Vec<f64> = {
        let mut y = vec![0.0; lifted.n()];
        y[0] = 1.0;
        y
    };
    let li = ev.verify_left_inverse(op, &y, 1.0, &QuadratureConfig::new(1e-5, 1e-9, 400)?)?;
    checks.push(Check::measured("fundsol/left_inverse", li.residual, 5e-3, None));
    let td = ev.tail_doubling(&pairs[..3])?;
    let worst = td
        .iter()
        .map(|t| t.change / t.reported_error.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    checks.push(seeded("fundsol/tail_doubling", worst, 1.0, seed));
    Ok(checks)
}

/// Exact flow `exp(t X)(x)` as polynomials in `(x, t)`.
pub struct FieldFlow {
    n: usize,
    map: Vec<CompiledPoly>,
}

impl FieldFlow {
    pub fn new(field: &PolyVectorField) -> Result<Self> {
        let n = field.dim();
        let t = Polynomial::var(n + 1, n);
        let coeffs: Vec<Polynomial> = field.coeffs().iter().map(|c| &c.extend(n + 1) * &t).collect();
        let map = lie_series_map(&coeffs, n, 128)?.iter().map(|p| p.compile()).collect();
        Ok(FieldFlow { n, map })
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Vec<f64> {
        let mut p = x.to_vec();
        p.truncate(self.n);
        p.push(t);
        self.map.iter().map(|c| c.eval(&p)).collect()
    }
}

/// `X_i Γ(·, y)` at `x` by Richardson-extrapolated central differences
/// along the exact flow of `X_i`.
pub fn derivative_oracle(ev: &SaturationEvaluator, flow: &FieldFlow, degree: u32, x: &[f64], y: &[f64]) -> Result<f64> {
    let gauge = x
        .iter()
        .zip(y)
        .zip(ev.lifted().sigma())
        .map(|((a, b), s)| (a - b).abs().powf(1.0 / *s as f64))
        .fold(0.0, f64::max);
    let h = (0.02 * gauge).powi(degree as i32);
    let central = |h: f64| -> Result<f64> {
        let a = ev.gamma_eval(&flow.eval(x, h), y)?.value;
        let b = ev.gamma_eval(&flow.eval(x, -h), y)?.value;
        Ok((a - b) / (2.0 * h))
    };
    let d1 = central(h)?;
    let d2 = central(0.5 * h)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// Kernel derivatives against the finite-difference oracle, and their
/// scaling exponent `ν − q − ν_i`.
pub fn derivative_checks(ev: &SaturationEvaluator, settings: &Settings) -> Result<Vec<Check>> {
    let lifted = ev.lifted();
    let seed = settings.seed;
    let pairs = sample_pairs(lifted.n(), 10, seed ^ 0xd1);
    let mut worst_fd: f64 = 0.0;
    let mut worst_scaling: f64 = 0.0;
    for (i, field) in lifted.base_fields().iter().enumerate() {
        let flow = FieldFlow::new(field)?;
        for (x, y) in &pairs {
            let jet = ev.gamma_x_derivative(&MultiIndex(vec![i]), x, y)?.value;
            let fd = derivative_oracle(ev, &flow, lifted.degrees()[i], x, y)?;
            worst_fd = worst_fd.max((jet - fd).abs() / fd.abs().max(1e-300));
        }
        worst_scaling = worst_scaling.max(ev.verify_homogeneity(&[i], &pairs, &[0.5, 2.0, 4.0])?);
    }
    Ok(vec![
        seeded("derivative/finite_difference", worst_fd, 1e-4, seed),
        seeded("derivative/scaling_exponent", worst_scaling, 1e-5, seed),
    ])
}

/// Least-squares slope of `log v` against `log r`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|(r, v)| (r.ln(), v.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn dyadic(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(k)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricData {
    pub unit_distance: Option<f64>,
    pub distance_scaling: Vec<(f64, f64)>,
    pub origin_volumes: VolumeTable,
    pub doubling_origin: Vec<(f64, f64, f64, f64)>,
    pub doubling_offset: Vec<(f64, f64, f64, f64)>,
    pub fractional_multiples: Vec<(f64, f64)>,
}

/// True when `X_1 = ∂_1` and no other field moves `x_1`; then the distance
/// from the origin to `e_1` is exactly one.
fn unit_distance_applies(model: &Model) -> bool {
    let sys = &model.system;
    let n = sys.dim();
    sys.fields()[0] == PolyVectorField::coordinate(n, 0) && sys.fields()[1..].iter().all(|f| f.coeff(0).is_zero())
}

pub fn metric_checks(model: &Model, settings: &Settings) -> Result<(Vec<Check>, MetricData)> {
    let sys = &model.system;
    let n = sys.dim();
    let q = sys.homogeneous_dimension() as f64;
    let seed = settings.seed;
    let metric = ControlMetric::new(
        sys,
        DistanceConfig {
            tol: settings.distance_tol,
            seed,
            ..Default::default()
        },
    )?;
    let origin = vec![0.0; n];
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let mut checks = Vec::new();

    let unit_distance = if unit_distance_applies(model) {
        let fine = metric.with_config(DistanceConfig {
            tol: 1e-4,
            ..metric.config().clone()
        });
        let d = fine.distance(&origin, &e1)?.upper;
        checks.push(seeded("metric/unit_distance", (d - 1.0).abs(), 1e-3, seed));
        Some(d)
    } else {
        None
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3e7);
    let y0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let distance_scaling = dyadic(-2, 2)
        .into_iter()
        .map(|l| Ok((l, metric.distance(&origin, &sys.dilation().apply(l, &y0))?.upper)))
        .collect::<Result<Vec<_>>>()?;
    checks.push(seeded("metric/distance_scaling_exponent", (loglog_slope(&distance_scaling) - 1.0).abs(), 0.05, seed));

    let origin_volumes = VolumeTable::build(&metric, &origin, &dyadic(-8, 2), settings.samples, seed)?;
    let slope_pts: Vec<(f64, f64)> = origin_volumes
        .rows
        .iter()
        .filter(|(r, _)| *r >= 2f64.powi(-4))
        .map(|(r, v)| (*r, v.estimate))
        .collect();
    checks.push(seeded("metric/ball_volume_slope", (loglog_slope(&slope_pts) - q).abs(), 0.15, seed));

    let bound = 2f64.powf(q + 2.0);
    let radii = dyadic(-4, 3);
    let mut doubling = Vec::new();
    for (label, x) in [("origin", &origin), ("offset", &e1)] {
        let rep = metric.doubling_check(x, &radii, settings.samples, seed)?;
        let ok = rep.bounded_by(bound);
        let spread = rep.max_ratio / rep.min_ratio;
        checks.push(seeded(
            &format!("metric/doubling_{label}"),
            if ok { spread } else { f64::INFINITY },
            4.0,
            seed,
        ));
        doubling.push(rep.rows.iter().map(|r| (r.r, r.ratio, r.lo, r.hi)).collect::<Vec<_>>());
    }

    let vol = |rho: f64| Ok(origin_volumes.eval(rho));
    let coarse = metric.with_config(DistanceConfig {
        tol: 1e-2,
        ..metric.config().clone()
    });
    let fractional_multiples = [0.5, 1.0, 2.0]
        .iter()
        .map(|r| Ok((*r, coarse.fractional_integral_check(&origin, *r, 1.0, settings.samples / 2, seed, &vol)?.multiple)))
        .collect::<Result<Vec<_>>>()?;
    let ms: Vec<f64> = fractional_multiples.iter().map(|m| m.1).collect();
    let (lo, hi) = (ms.iter().copied().fold(f64::INFINITY, f64::min), ms.iter().copied().fold(0.0, f64::max));
    checks.push(seeded("metric/fractional_integral_stability", (hi - lo) / lo, 0.3, seed));

    let mut it = doubling.into_iter();
    Ok((
        checks,
        MetricData {
            unit_distance,
            distance_scaling,
            origin_volumes,
            doubling_origin: it.next().unwrap_or_default(),
            doubling_offset: it.next().unwrap_or_default(),
            fractional_multiples,
        },
    ))
}

/// Pairs `(x, x + δ_s u)` around seeded base points, labelled by `s`.
pub fn scan_pairs(sigma: &[u32], bases: &[Vec<f64>], scales: &[f64], directions: usize, seed: u64) -> Vec<ScanPair> {
    let n = sigma.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<Vec<f64>> = (0..directions)
        .map(|_| {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g = v.iter().zip(sigma).map(|(a, s)| a.abs().powf(1.0 / *s as f64)).fold(0.0, f64::max);
            v.iter().zip(sigma).map(|(a, s)| a / g.powi(*s as i32)).collect()
        })
        .collect();
    let mut out = Vec::new();
    for s in scales {
        for x in bases {
            for u in &dirs {
                let y: Vec<f64> = x.iter().zip(u).zip(sigma).map(|((a, b), e)| a + b * s.powi(*e as i32)).collect();
                out.push(ScanPair {
                    scale: *s,
                    x: x.clone(),
                    y,
                });
            }
        }
    }
    out
}

/// The origin plus `count` seeded points whose gauge radius is
/// log-uniform in `[2^lo, 2^hi]`.
pub fn gauge_spread_points(sigma: &[u32], count: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = sigma.len();
    let mut out = vec![vec![0.0; n]];
    for _ in 0..count {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = v.iter().zip(sigma).map(|(a, s)| a.abs().powf(1.0 / *s as f64)).fold(0.0, f64::max);
        let rho = 2f64.powf(rng.gen_range(lo..hi));
        out.push(v.iter().zip(sigma).map(|(a, s)| a * (rho / g).powi(*s as i32)).collect());
    }
    out
}

/// Pointwise estimates of `Γ` and its derivatives, with the bracket
/// volume as the ball-volume oracle.
///
/// The non-critical order is `ν − n + 1`. Base points spread over the same
/// gauge range as the pair scales, so every scale sees near and far
/// configurations alike; the per-scale sups must agree within `2×`.
///
/// The critical order `ν − n` is checked when non-negative, on pairs inside
/// `[−2, 2]^n`. Boundedness means the log-corrected sup does not grow
/// toward the diagonal: the sup over the three smallest scales is at most
/// twice the sup over the three largest.
///
/// Far base points make near-diagonal integrals roundoff-limited, so the
/// scan runs at relative tolerance `1e-7`.
pub fn estimate_checks(model: &Model, ev: &SaturationEvaluator, settings: &Settings) -> Result<(Vec<Check>, serde_json::Value)> {
    let ev = &ev.with_config(QuadratureConfig::new(settings.gamma_tol.max(1e-7), 1e-15, 400)?);
    let sys = &model.system;
    let sigma = sys.dilation().sigma();
    let n = sys.dim();
    let seed = settings.seed;
    let metric = ControlMetric::new(
        sys,
        DistanceConfig {
            tol: settings.distance_tol,
            seed,
            ..Default::default()
        },
    )?;
    let bracket = BracketVolume::new(sys)?;
    let dist = |x: &[f64], y: &[f64]| Ok(metric.distance(x, y)?.upper);
    let vol = |x: &[f64], r: f64| Ok(bracket.eval(x, r));
    let nu = ev.nu() as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe57);
    let mut checks = Vec::new();

    let order = (nu - n as i64 + 1).max(0) as u32;
    let bases = gauge_spread_points(sigma, 16, -4.0, 4.0, &mut rng);
    let pairs = scan_pairs(sigma, &bases, &dyadic(-4, 3), 6, seed);
    let scan = estimate_scan(ev, &dist, &vol, order, &pairs)?;
    checks.push(seeded(
        "estimate/non_critical_scale_spread",
        if scan.sup.is_finite() { scan.spread } else { f64::INFINITY },
        2.0,
        seed,
    ));
    let mut data = serde_json::json!({ "non_critical": { "order": order, "sup_by_scale": scan.sup_by_scale, "sup": scan.sup } });

    if nu - n as i64 >= 0 {
        let mut bases: Vec<Vec<f64>> = vec![vec![0.0; n]];
        bases.extend((0..5).map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<f64>>()));
        let pairs: Vec<ScanPair> = scan_pairs(sigma, &bases, &dyadic(-5, 0), 6, seed ^ 1)
            .into_iter()
            .filter(|p| p.y.iter().all(|v| v.abs() <= 2.0))
            .collect();
        let crit = estimate_scan(ev, &dist, &vol, (nu - n as i64) as u32, &pairs)?;
        let sups: Vec<f64> = crit.sup_by_scale.iter().map(|(_, v)| *v).collect();
        let k = sups.len().min(3);
        let near = sups[..k].iter().copied().fold(0.0, f64::max);
        let far = sups[sups.len() - k..].iter().copied().fold(0.0, f64::max);
        let growth = if crit.sup.is_finite() && far > 0.0 { near / far } else { f64::INFINITY };
        checks.push(seeded("estimate/critical_log_bounded", growth, 2.0, seed));
        data["critical"] = serde_json::json!({ "order": nu - n as i64, "log_radius": crit.log_radius, "sup_by_scale": crit.sup_by_scale, "sup": crit.sup });
    }
    Ok((checks, data))
}

/// Heat extension `L + sign·∂_t`: homogeneity under the extended
/// dilation, time exponent `ν`, `q' = q + ν`, and the spatial pattern.
pub fn heat_checks(model: &Model, sign: i32) -> Result<(Vec<Check>, serde_json::Value)> {
    let op = model
        .operator
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("heat extension needs an operator".into()))?;
    let sys = &model.system;
    let ext = heat_extend(sys, op, sign)?;
    let nu = op.degree();
    let certified = ext.certify()?;
    let q = sys.homogeneous_dimension();
    let checks = vec![
        boolean("heat/fields_homogeneous", certified == ext.degrees),
        boolean("heat/operator_degree", ext.operator.degree() == nu),
        boolean("heat/time_exponent", ext.time_exponent == nu),
        boolean("heat/homogeneous_dimension", ext.homogeneous_dimension() == q + nu),
        boolean("heat/positive_rockland_pattern", classify_positive_rockland_pattern(op, sys.degrees())),
    ];
    let mut names: Vec<String> = sys.names().to_vec();
    names.push("T".into());
    let data = serde_json::json!({
        "sigma": ext.dilation.sigma(),
        "degrees": ext.degrees,
        "time_exponent": ext.time_exponent,
        "q": q,
        "q_extended": ext.homogeneous_dimension(),
        "operator": ext.operator.render(&names),
        "sign": ext.sign,
    });
    Ok((checks, data))
}
