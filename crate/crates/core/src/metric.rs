//! Weighted control distance, metric ball volumes and the numerical
//! checks built on them (doubling, fractional integrals, pointwise
//! estimates of `Γ`).
//!
//! Paths are piecewise constant in the controls. On each segment the
//! flow of `Σ b_i X_i` is an exact polynomial map of `(x, b)` because the
//! Lie series terminates for graded fields, so endpoints and their
//! gradients in the controls are exact up to floating point.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactpoly::{CompiledPoly, Polynomial};
use crate::fields::{HomogeneousSystem, MultiIndex, PolyVectorField};
use crate::fundsol::SaturationEvaluator;
use crate::lifting::lie_series_map;
use crate::quadrature::poly_abs_bound;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Segment {
    /// Fraction of the unit time interval.
    pub duration: f64,
    pub controls: Vec<f64>,
}

/// Piecewise constant control of scale `δ`: `|a_i| ≤ δ^{ν_i}` on every
/// segment and the durations sum to one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControlPath {
    pub segments: Vec<Segment>,
    pub scale: f64,
}

impl ControlPath {
    pub fn validate(&self, degrees: &[u32]) -> Result<()> {
        let total: f64 = self.segments.iter().map(|s| s.duration).sum();
        if self.segments.iter().any(|s| !(s.duration >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("segment durations must be non-negative and sum to 1, got {total}")));
        }
        for (k, s) in self.segments.iter().enumerate() {
            if s.controls.len() != degrees.len() {
                return Err(Error::DimensionMismatch {
                    expected: degrees.len(),
                    got: s.controls.len(),
                });
            }
            for (a, nu) in s.controls.iter().zip(degrees) {
                if a.abs() > self.scale.powi(*nu as i32) * (1.0 + 1e-9) {
                    return Err(Error::InvalidArgument(format!(
                        "control {a} on segment {k} exceeds the bound for scale {}",
                        self.scale
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceResult {
    /// Scale of a path that was found to reach the target.
    pub upper: f64,
    /// Largest scale at which the budgeted search found no path. A search
    /// certificate, not a proof.
    pub lower: f64,
    pub path: ControlPath,
    /// Homogeneous miss of the returned path, relative to its scale.
    pub miss: f64,
}

impl DistanceResult {
    pub fn estimate(&self) -> f64 {
        self.upper
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VolumeResult {
    pub estimate: f64,
    /// 95% Wilson interval scaled by the box volume.
    pub confidence_interval: (f64, f64),
    pub samples: usize,
    pub hits: usize,
    pub seed: u64,
    pub box_volume: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceConfig {
    /// Relative bracket width at which bisection stops.
    pub tol: f64,
    pub segment_schedule: Vec<usize>,
    pub starts: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        DistanceConfig {
            tol: 1e-3,
            segment_schedule: vec![4, 8, 16],
            starts: 4,
            max_iterations: 150,
            seed: 0,
        }
    }
}

/// Exact flow `exp(Σ b_i X_i)(x)` and its partial derivatives.
#[derive(Clone, Debug)]
struct FlowMap {
    n: usize,
    m: usize,
    map: Vec<CompiledPoly>,
    dx: Vec<Vec<CompiledPoly>>,
    db: Vec<Vec<CompiledPoly>>,
}

impl FlowMap {
    fn new(fields: &[PolyVectorField]) -> Result<Self> {
        let n = fields[0].dim();
        let m = fields.len();
        let total = n + m;
        let mut coeffs = vec![Polynomial::zero(total); n];
        for (j, f) in fields.iter().enumerate() {
            let b = Polynomial::var(total, n + j);
            for (i, c) in f.coeffs().iter().enumerate() {
                coeffs[i] = &coeffs[i] + &(&c.extend(total) * &b);
            }
        }
        let polys = lie_series_map(&coeffs, n, 128)?;
        let map = polys.iter().map(|p| p.compile()).collect();
        let mut dx = Vec::with_capacity(n);
        let mut db = Vec::with_capacity(n);
        for p in &polys {
            dx.push((0..n).map(|j| p.diff(j).map(|d| d.compile())).collect::<Result<Vec<_>>>()?);
            db.push((0..m).map(|j| p.diff(n + j).map(|d| d.compile())).collect::<Result<Vec<_>>>()?);
        }
        Ok(FlowMap { n, m, map, dx, db })
    }

    fn point(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        x.iter().chain(b).copied().collect()
    }

    fn apply(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        let p = self.point(x, b);
        self.map.iter().map(|c| c.eval(&p)).collect()
    }
}

/// Weighted control distance and metric balls for a homogeneous system.
#[derive(Clone, Debug)]
pub struct ControlMetric {
    degrees: Vec<u32>,
    sigma: Vec<u32>,
    fields: Vec<PolyVectorField>,
    flow: FlowMap,
    config: DistanceConfig,
}

struct Attempt {
    miss: f64,
    theta: Vec<f64>,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl ControlMetric {
    pub fn new(system: &HomogeneousSystem, config: DistanceConfig) -> Result<Self> {
        if !(config.tol > 0.0) || config.segment_schedule.is_empty() || config.starts == 0 {
            return Err(Error::InvalidArgument("distance tolerance, segment schedule and starts must be positive".into()));
        }
        Ok(ControlMetric {
            degrees: system.degrees().to_vec(),
            sigma: system.dilation().sigma().to_vec(),
            fields: system.fields().to_vec(),
            flow: FlowMap::new(system.fields())?,
            config,
        })
    }

    pub fn config(&self) -> &DistanceConfig {
        &self.config
    }

    pub fn with_config(&self, config: DistanceConfig) -> Self {
        ControlMetric { config, ..self.clone() }
    }

    pub fn dim(&self) -> usize {
        self.flow.n
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn sigma(&self) -> &[u32] {
        &self.sigma
    }

    /// Endpoint of the path started at `x`, flowing each segment exactly.
    pub fn endpoint(&self, x: &[f64], path: &ControlPath) -> Result<Vec<f64>> {
        if x.len() != self.flow.n {
            return Err(Error::DimensionMismatch {
                expected: self.flow.n,
                got: x.len(),
            });
        }
        let mut z = x.to_vec();
        for s in &path.segments {
            if s.controls.len() != self.flow.m {
                return Err(Error::DimensionMismatch {
                    expected: self.flow.m,
                    got: s.controls.len(),
                });
            }
            let b: Vec<f64> = s.controls.iter().map(|a| a * s.duration).collect();
            z = self.flow.apply(&z, &b);
        }
        Ok(z)
    }

    fn gauge_miss(&self, r: &[f64]) -> f64 {
        r.iter()
            .zip(&self.sigma)
            .map(|(v, s)| v.abs().powf(1.0 / *s as f64))
            .fold(0.0, f64::max)
    }

    fn controls(&self, theta: &[f64], delta: f64) -> Vec<Vec<f64>> {
        theta
            .chunks(self.flow.m)
            .map(|c| c.iter().zip(&self.degrees).map(|(t, nu)| delta.powi(*nu as i32) * t.sin()).collect())
            .collect()
    }

    fn path_from(&self, theta: &[f64], delta: f64) -> ControlPath {
        let ctrl = self.controls(theta, delta);
        let k = ctrl.len() as f64;
        ControlPath {
            segments: ctrl.into_iter().map(|c| Segment { duration: 1.0 / k, controls: c }).collect(),
            scale: delta,
        }
    }

    /// Scaled residual `(z − y)_i / δ^{σ_i}` and its Jacobian in `θ`.
    fn residual(&self, x: &[f64], y: &[f64], theta: &[f64], delta: f64, jac: bool) -> (Vec<f64>, Option<DMatrix<f64>>) {
        let (n, m) = (self.flow.n, self.flow.m);
        let segs = theta.len() / m;
        let tau = 1.0 / segs as f64;
        let pw: Vec<f64> = self.degrees.iter().map(|nu| delta.powi(*nu as i32)).collect();
        let mut z = x.to_vec();
        let mut d = if jac { Some(DMatrix::<f64>::zeros(n, theta.len())) } else { None };
        for k in 0..segs {
            let th = &theta[k * m..(k + 1) * m];
            let b: Vec<f64> = th.iter().zip(&pw).map(|(t, p)| tau * p * t.sin()).collect();
            let pt = self.flow.point(&z, &b);
            if let Some(dm) = d.as_mut() {
                let fx = DMatrix::from_fn(n, n, |i, j| self.flow.dx[i][j].eval(&pt));
                let mut next = &fx * &*dm;
                for j in 0..m {
                    let scale = tau * pw[j] * th[j].cos();
                    for i in 0..n {
                        next[(i, k * m + j)] += self.flow.db[i][j].eval(&pt) * scale;
                    }
                }
                *dm = next;
            }
            z = self.flow.map.iter().map(|c| c.eval(&pt)).collect();
        }
        let inv: Vec<f64> = self.sigma.iter().map(|s| delta.powi(-(*s as i32))).collect();
        let r: Vec<f64> = z.iter().zip(y).zip(&inv).map(|((a, b), w)| (a - b) * w).collect();
        let d = d.map(|mut dm| {
            for i in 0..n {
                for c in 0..dm.ncols() {
                    dm[(i, c)] *= inv[i];
                }
            }
            dm
        });
        (r, d)
    }

    /// Levenberg–Marquardt on the scaled residual from `theta`.
    fn minimize(&self, x: &[f64], y: &[f64], delta: f64, mut theta: Vec<f64>, target: f64) -> Attempt {
        let n = self.flow.n;
        let (mut r, mut jm) = self.residual(x, y, &theta, delta, true);
        let mut cost: f64 = r.iter().map(|v| v * v).sum();
        let mut mu = 1e-3;
        let mut stall = 0;
        for _ in 0..self.config.max_iterations {
            if self.gauge_miss(&r) <= target || !cost.is_finite() {
                break;
            }
            let j = jm.as_ref().expect("jacobian requested");
            let jjt = j * j.transpose();
            let mut accepted = false;
            while mu < 1e12 {
                let mut a = jjt.clone();
                let tr = (0..n).map(|i| jjt[(i, i)]).sum::<f64>() / n as f64;
                for i in 0..n {
                    a[(i, i)] += mu * tr.max(1e-300);
                }
                let Some(w) = a.lu().solve(&DVector::from_vec(r.clone())) else {
                    mu *= 10.0;
                    continue;
                };
                let step = -(j.transpose() * w);
                let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
                let (r2, _) = self.residual(x, y, &trial, delta, false);
                let c2: f64 = r2.iter().map(|v| v * v).sum();
                if c2 < cost {
                    stall = if c2 > cost * (1.0 - 1e-6) { stall + 1 } else { 0 };
                    theta = trial;
                    cost = c2;
                    mu = (mu / 4.0).max(1e-12);
                    accepted = true;
                    break;
                }
                mu *= 4.0;
            }
            if !accepted || stall >= 8 {
                break;
            }
            let (r2, j2) = self.residual(x, y, &theta, delta, true);
            r = r2;
            jm = j2;
        }
        let (r, _) = self.residual(x, y, &theta, delta, false);
        Attempt {
            miss: self.gauge_miss(&r),
            theta,
        }
    }

    /// Search for a path of scale `delta` from `x` whose endpoint misses `y`
    /// by at most `target` in the homogeneous gauge relative to `delta`.
    /// Returns the best attempt; `warm` seeds the first start.
    fn search(&self, x: &[f64], y: &[f64], delta: f64, target: f64, warm: Option<&[f64]>) -> Attempt {
        let m = self.flow.m;
        let mut best: Option<Attempt> = None;
        if let Some(w) = warm {
            let a = self.minimize(x, y, delta, w.to_vec(), target);
            if a.miss <= target {
                return a;
            }
            best = Some(a);
        }
        for &segs in &self.config.segment_schedule {
            for s in 0..self.config.starts {
                let seed = mix(self.config.seed ^ mix(segs as u64 * 1000 + s as u64) ^ delta.to_bits());
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let theta: Vec<f64> = (0..segs * m)
                    .map(|_| rng.gen_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2))
                    .collect();
                let a = self.minimize(x, y, delta, theta, target);
                if a.miss <= target {
                    return a;
                }
                if best.as_ref().is_none_or(|b| a.miss < b.miss) {
                    best = Some(a);
                }
            }
        }
        best.expect("at least one start")
    }

    /// Whether some path of scale `delta` reaches `y` from `x` up to a
    /// homogeneous miss of `miss_tol · delta`.
    pub fn reachable(&self, x: &[f64], y: &[f64], delta: f64, miss_tol: f64) -> Result<bool> {
        self.check_points(x, y)?;
        if x == y {
            return Ok(true);
        }
        if !(delta > 0.0) {
            return Ok(false);
        }
        Ok(self.search(x, y, delta, miss_tol, None).miss <= miss_tol)
    }

    fn check_points(&self, x: &[f64], y: &[f64]) -> Result<()> {
        let n = self.flow.n;
        if x.len() != n || y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: if x.len() != n { x.len() } else { y.len() },
            });
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("points must be finite".into()));
        }
        Ok(())
    }

    /// Bisection on the scale with feasibility decided by the path search.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<DistanceResult> {
        self.check_points(x, y)?;
        let target = 0.1 * self.config.tol;
        if x == y {
            return Ok(DistanceResult {
                upper: 0.0,
                lower: 0.0,
                path: ControlPath {
                    segments: vec![Segment {
                        duration: 1.0,
                        controls: vec![0.0; self.flow.m],
                    }],
                    scale: 0.0,
                },
                miss: 0.0,
            });
        }
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - a).collect();
        let guess = self.gauge_miss(&diff);
        let mut feasible: Option<(f64, Vec<f64>)> = None;
        let mut lo = 0.0;
        let mut delta = guess;
        let first = self.search(x, y, delta, target, None);
        if first.miss <= target {
            feasible = Some((delta, first.theta));
            for _ in 0..60 {
                delta *= 0.5;
                let w = feasible.as_ref().map(|f| f.1.clone());
                let a = self.search(x, y, delta, target, w.as_deref());
                if a.miss <= target {
                    feasible = Some((delta, a.theta));
                } else {
                    lo = delta;
                    break;
                }
            }
        } else {
            lo = delta;
            for _ in 0..60 {
                delta *= 2.0;
                let a = self.search(x, y, delta, target, None);
                if a.miss <= target {
                    feasible = Some((delta, a.theta));
                    break;
                }
                lo = delta;
            }
        }
        let Some((mut hi, mut theta)) = feasible else {
            return Err(Error::Metric(format!(
                "path search stagnated: no feasible scale found up to {delta:.3e} (best bracket lower {lo:.3e})"
            )));
        };
        while hi - lo > self.config.tol * hi {
            let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
            let a = self.search(x, y, mid, target, Some(&theta));
            if a.miss <= target {
                hi = mid;
                theta = a.theta;
            } else {
                lo = mid;
            }
        }
        let (r, _) = self.residual(x, y, &theta, hi, false);
        Ok(DistanceResult {
            upper: hi,
            lower: lo,
            path: self.path_from(&theta, hi),
            miss: self.gauge_miss(&r),
        })
    }

    /// Half-widths of a box centred at `x` containing every endpoint of a
    /// path of scale `r` started at `x`. Coordinates are bounded in order of
    /// increasing degree; a coefficient of `∂_i` may only depend on
    /// coordinates already bounded.
    pub fn reach_box(&self, x: &[f64], r: f64) -> Result<Vec<f64>> {
        let n = self.flow.n;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|i| (self.sigma[*i], *i));
        let mut half = vec![f64::NAN; n];
        for &i in &order {
            let lo: Vec<f64> = (0..n)
                .map(|k| if half[k].is_nan() { x[k] } else { x[k] - half[k] })
                .collect();
            let hi: Vec<f64> = (0..n)
                .map(|k| if half[k].is_nan() { x[k] } else { x[k] + half[k] })
                .collect();
            let mut bound = 0.0;
            for (j, f) in self.fields.iter().enumerate() {
                let c = f.coeff(i);
                if let Some(k) = (0..n).find(|k| half[*k].is_nan() && c.depends_on(*k)) {
                    return Err(Error::Metric(format!(
                        "cannot certify a reach box: coefficient of d{} in field {} depends on x{}",
                        i + 1,
                        j + 1,
                        k + 1
                    )));
                }
                bound += r.powi(self.degrees[j] as i32) * poly_abs_bound(c, &lo, &hi);
            }
            half[i] = bound;
        }
        Ok(half)
    }

    /// Monte Carlo volume of `{y : d(x,y) < r}` over the reach box.
    /// Membership uses a relaxed miss of three times the distance
    /// tolerance, which can only over-count.
    pub fn ball_volume(&self, x: &[f64], r: f64, samples: usize, seed: u64) -> Result<VolumeResult> {
        self.check_points(x, x)?;
        if !(r > 0.0) || samples == 0 {
            return Err(Error::InvalidArgument("ball volume needs r > 0 and at least one sample".into()));
        }
        let half = self.reach_box(x, r)?;
        let box_volume: f64 = half.iter().map(|h| 2.0 * h).product();
        let miss = 3.0 * self.config.tol;
        let hits: usize = (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix(seed ^ mix(i as u64)));
                let y: Vec<f64> = x.iter().zip(&half).map(|(c, h)| c + h * rng.gen_range(-1.0..1.0)).collect();
                usize::from(self.search(x, &y, r, miss, None).miss <= miss)
            })
            .sum();
        let (lo, hi) = wilson(hits, samples);
        let frac = hits as f64 / samples as f64;
        Ok(VolumeResult {
            estimate: frac * box_volume,
            confidence_interval: (lo * box_volume, hi * box_volume),
            samples,
            hits,
            seed,
            box_volume,
        })
    }

    /// Ratios `|B(x,2r)| / |B(x,r)|` with interval propagation. Each
    /// distinct radius is estimated once, with a seed derived from the radius.
    pub fn doubling_check(&self, x: &[f64], radii: &[f64], samples: usize, seed: u64) -> Result<DoublingReport> {
        if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::InvalidArgument("radii must be positive".into()));
        }
        let mut all: Vec<f64> = radii.iter().flat_map(|r| [*r, 2.0 * r]).collect();
        all.sort_by(f64::total_cmp);
        all.dedup();
        let vols: Vec<(f64, VolumeResult)> = all
            .iter()
            .map(|r| Ok((*r, self.ball_volume(x, *r, samples, seed ^ mix(r.to_bits()))?)))
            .collect::<Result<_>>()?;
        let get = |r: f64| vols.iter().find(|v| v.0 == r).map(|v| v.1.clone()).expect("radius computed");
        let rows: Vec<DoublingRow> = radii
            .iter()
            .map(|&r| {
                let (a, b) = (get(r), get(2.0 * r));
                DoublingRow {
                    r,
                    ratio: b.estimate / a.estimate,
                    lo: b.confidence_interval.0 / a.confidence_interval.1,
                    hi: b.confidence_interval.1 / a.confidence_interval.0,
                    small: a,
                    large: b,
                }
            })
            .collect();
        let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
        Ok(DoublingReport {
            x: x.to_vec(),
            max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
            rows,
        })
    }

    /// Monte Carlo estimate of `∫_{d(x,y)<r} d(x,y)^α / |B(x, d(x,y))| dy`
    /// reported as a multiple of `r^α`. `vol` supplies `|B(x, ρ)|`.
    pub fn fractional_integral_check(
        &self,
        x: &[f64],
        r: f64,
        alpha: f64,
        samples: usize,
        seed: u64,
        vol: &(dyn Fn(f64) -> Result<f64> + Sync),
    ) -> Result<FractionalReport> {
        if !(alpha > 0.0) || !(r > 0.0) || samples == 0 {
            return Err(Error::InvalidArgument("fractional integral needs alpha > 0, r > 0 and samples".into()));
        }
        let half = self.reach_box(x, r)?;
        let box_volume: f64 = half.iter().map(|h| 2.0 * h).product();
        let values: Vec<Result<f64>> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix(seed ^ mix(i as u64)));
                let y: Vec<f64> = x.iter().zip(&half).map(|(c, h)| c + h * rng.gen_range(-1.0..1.0)).collect();
                if self.search(x, &y, r, 0.1 * self.config.tol, None).miss > 0.1 * self.config.tol {
                    return Ok(0.0);
                }
                let d = self.distance(x, &y)?.upper.min(r);
                Ok(d.powf(alpha) / vol(d)?)
            })
            .collect();
        let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
        let mean = values.iter().sum::<f64>() / samples as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples.max(2) - 1) as f64;
        let integral = mean * box_volume;
        let std_error = (var / samples as f64).sqrt() * box_volume;
        Ok(FractionalReport {
            r,
            alpha,
            integral,
            std_error,
            multiple: integral / r.powf(alpha),
            samples,
            seed,
        })
    }
}

/// Monte Carlo ball volumes at fixed radii around one centre,
/// interpolated linearly in `log r`–`log |B|` and extrapolated with the
/// end slopes.
#[derive(Clone, Debug, Serialize)]
pub struct VolumeTable {
    pub x: Vec<f64>,
    pub rows: Vec<(f64, VolumeResult)>,
}

impl VolumeTable {
    pub fn build(metric: &ControlMetric, x: &[f64], radii: &[f64], samples: usize, seed: u64) -> Result<Self> {
        let mut radii = radii.to_vec();
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        if radii.len() < 2 {
            return Err(Error::InvalidArgument("a volume table needs at least two radii".into()));
        }
        let rows = radii
            .iter()
            .enumerate()
            .map(|(k, r)| Ok((*r, metric.ball_volume(x, *r, samples, seed ^ mix(k as u64))?)))
            .collect::<Result<Vec<_>>>()?;
        if rows.iter().any(|(_, v)| v.hits == 0) {
            return Err(Error::Metric("a table radius produced no hits; raise the sample count".into()));
        }
        Ok(VolumeTable { x: x.to_vec(), rows })
    }

    pub fn eval(&self, r: f64) -> f64 {
        let pts: Vec<(f64, f64)> = self.rows.iter().map(|(r, v)| (r.ln(), v.estimate.ln())).collect();
        let t = r.ln();
        let k = pts.iter().position(|p| p.0 >= t).unwrap_or(pts.len() - 1).clamp(1, pts.len() - 1);
        let (a, b) = (pts[k - 1], pts[k]);
        (a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)).exp()
    }

    /// Least-squares slope of `log |B|` against `log r`.
    pub fn slope(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self.rows.iter().map(|(r, v)| (r.ln(), v.estimate.ln())).collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson(hits: usize, n: usize) -> (f64, f64) {
    let z = 1.959_963_984_540_054f64;
    let nf = n as f64;
    let p = hits as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let centre = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct DoublingRow {
    pub r: f64,
    pub ratio: f64,
    pub lo: f64,
    pub hi: f64,
    pub small: VolumeResult,
    pub large: VolumeResult,
}

#[derive(Clone, Debug, Serialize)]
pub struct DoublingReport {
    pub x: Vec<f64>,
    pub rows: Vec<DoublingRow>,
    pub max_ratio: f64,
    pub min_ratio: f64,
}

impl DoublingReport {
    /// All ratios finite, at least one up to the interval, and below `bound`.
    pub fn bounded_by(&self, bound: f64) -> bool {
        self.rows
            .iter()
            .all(|r| r.ratio.is_finite() && r.hi >= 1.0 && r.ratio <= bound)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FractionalReport {
    pub r: f64,
    pub alpha: f64,
    pub integral: f64,
    pub std_error: f64,
    pub multiple: f64,
    pub samples: usize,
    pub seed: u64,
}

/// `Λ(x,r) = Σ |det(Y_1(x),…,Y_n(x))| r^{deg Y_1 + … + deg Y_n}` over
/// n-element sets of iterated commutators of the fields. Comparable to
/// `|B(x,r)|` with constants independent of `x` and `r`.
#[derive(Clone, Debug)]
pub struct BracketVolume {
    n: usize,
    brackets: Vec<(u32, Vec<CompiledPoly>)>,
}

impl BracketVolume {
    pub fn new(system: &HomogeneousSystem) -> Result<Self> {
        let n = system.dim();
        let top = *system.dilation().sigma().iter().max().unwrap_or(&1);
        let mut all: Vec<(u32, PolyVectorField)> = Vec::new();
        let mut frontier: Vec<(u32, PolyVectorField)> = system
            .fields()
            .iter()
            .zip(system.degrees())
            .filter(|(f, _)| !f.is_zero())
            .map(|(f, d)| (*d, f.clone()))
            .collect();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for (d, f) in frontier {
                if all.iter().any(|(_, g)| *g == f || *g == f.scale(&crate::exactpoly::int(-1))) {
                    continue;
                }
                for (g, gd) in system.fields().iter().zip(system.degrees()) {
                    if d + gd <= top {
                        let c = g.commutator(&f)?;
                        if !c.is_zero() {
                            next.push((d + gd, c));
                        }
                    }
                }
                all.push((d, f));
            }
            frontier = next;
        }
        let brackets = all
            .into_iter()
            .map(|(d, f)| (d, f.coeffs().iter().map(|c| c.compile()).collect()))
            .collect();
        Ok(BracketVolume { n, brackets })
    }

    pub fn len(&self) -> usize {
        self.brackets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.brackets.is_empty()
    }

    pub fn eval(&self, x: &[f64], r: f64) -> f64 {
        let n = self.n;
        let values: Vec<(u32, Vec<f64>)> = self
            .brackets
            .iter()
            .map(|(d, c)| (*d, c.iter().map(|p| p.eval(x)).collect()))
            .collect();
        let mut total = 0.0;
        let mut pick: Vec<usize> = (0..n).collect();
        if values.len() < n {
            return 0.0;
        }
        loop {
            let m = DMatrix::from_fn(n, n, |i, j| values[pick[j]].1[i]);
            let deg: u32 = pick.iter().map(|k| values[*k].0).sum();
            total += m.determinant().abs() * r.powi(deg as i32);
            // next n-subset in lexicographic order
            let mut i = n;
            loop {
                if i == 0 {
                    return total;
                }
                i -= 1;
                if pick[i] < values.len() - n + i {
                    break;
                }
                if i == 0 && pick[0] >= values.len() - n {
                    return total;
                }
            }
            pick[i] += 1;
            for j in i + 1..n {
                pick[j] = pick[j - 1] + 1;
            }
        }
    }
}

/// All words of total weight `r` in fields of the given degrees.
pub fn words_of_weight(degrees: &[u32], r: u32) -> Vec<MultiIndex> {
    fn rec(degrees: &[u32], left: u32, cur: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
        if left == 0 {
            out.push(MultiIndex(cur.clone()));
            return;
        }
        for (i, d) in degrees.iter().enumerate() {
            if *d <= left && *d > 0 {
                cur.push(i);
                rec(degrees, left - d, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(degrees, r, &mut Vec::new(), &mut out);
    out
}

/// A pair at a labelled scale for [`estimate_scan`].
#[derive(Clone, Debug, Serialize)]
pub struct ScanPair {
    pub scale: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub scale: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub word: Vec<usize>,
    pub distance: f64,
    pub volume: f64,
    pub derivative: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateScan {
    pub order: u32,
    pub critical: bool,
    /// `R₀` of the logarithmic correction in the critical case.
    pub log_radius: Option<f64>,
    pub rows: Vec<ScanRow>,
    /// `(scale, sup ratio)` per scale label.
    pub sup_by_scale: Vec<(f64, f64)>,
    pub sup: f64,
    /// Largest over smallest per-scale supremum.
    pub spread: f64,
}

/// Ratios `|X_I Γ(x,y)| |B(x,d)| / d^{ν−r}` over words of weight `r`
/// (non-critical, `r > ν − n`), or with the extra factor `log(R₀/d)` in
/// the denominator when `r = ν − n`. `R₀` is twice the largest sampled
/// distance.
pub fn estimate_scan(
    ev: &SaturationEvaluator,
    dist: &(dyn Fn(&[f64], &[f64]) -> Result<f64> + Sync),
    vol: &(dyn Fn(&[f64], f64) -> Result<f64> + Sync),
    order: u32,
    pairs: &[ScanPair],
) -> Result<EstimateScan> {
    let lifted = ev.lifted();
    let n = lifted.n() as i64;
    let nu = ev.nu() as i64;
    if (order as i64) < nu - n {
        return Err(Error::InvalidArgument(format!(
            "derivative order {order} is below nu - n = {}; the pointwise estimates do not cover it",
            nu - n
        )));
    }
    let critical = order as i64 == nu - n;
    let words = words_of_weight(lifted.degrees(), order);
    let dists: Vec<Result<f64>> = pairs.par_iter().map(|p| dist(&p.x, &p.y)).collect();
    let dists: Vec<f64> = dists.into_iter().collect::<Result<_>>()?;
    let r0 = if critical {
        Some(2.0 * dists.iter().copied().fold(0.0, f64::max))
    } else {
        None
    };
    let jobs: Vec<(usize, &MultiIndex)> = (0..pairs.len()).flat_map(|i| words.iter().map(move |w| (i, w))).collect();
    let rows: Vec<Result<ScanRow>> = jobs
        .par_iter()
        .map(|(i, w)| {
            let p = &pairs[*i];
            let d = dists[*i];
            let v = vol(&p.x, d)?;
            let g = ev.gamma_x_derivative(w, &p.x, &p.y)?.value;
            let mut denom = d.powi((nu - order as i64) as i32) / v;
            if let Some(r0) = r0 {
                denom *= (r0 / d).ln();
            }
            Ok(ScanRow {
                scale: p.scale,
                x: p.x.clone(),
                y: p.y.clone(),
                word: w.0.clone(),
                distance: d,
                volume: v,
                derivative: g,
                ratio: g.abs() / denom,
            })
        })
        .collect();
    let rows: Vec<ScanRow> = rows.into_iter().collect::<Result<_>>()?;
    let mut scales: Vec<f64> = pairs.iter().map(|p| p.scale).collect();
    scales.sort_by(f64::total_cmp);
    scales.dedup();
    let sup_by_scale: Vec<(f64, f64)> = scales
        .iter()
        .map(|s| {
            let sup = rows.iter().filter(|r| r.scale == *s).map(|r| r.ratio).fold(0.0, f64::max);
            (*s, sup)
        })
        .collect();
    let sup = sup_by_scale.iter().map(|s| s.1).fold(0.0, f64::max);
    let low = sup_by_scale.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    Ok(EstimateScan {
        order,
        critical,
        log_radius: r0,
        rows,
        sup_by_scale,
        sup,
        spread: sup / low,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::DilationFamily;

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

    fn path(segs: &[(f64, [f64; 2])], scale: f64) -> ControlPath {
        ControlPath {
            segments: segs
                .iter()
                .map(|(d, c)| Segment {
                    duration: *d,
                    controls: c.to_vec(),
                })
                .collect(),
            scale,
        }
    }

    #[test]
    fn endpoints() {
        let m = ControlMetric::new(&grushin(), DistanceConfig::default()).unwrap();
        let e = m.endpoint(&[0.0, 0.0], &path(&[(1.0, [0.7, 0.0])], 0.7)).unwrap();
        assert_eq!(e, vec![0.7, 0.0]);
        let e = m.endpoint(&[0.3, -2.0], &path(&[(1.0, [0.0, 0.0])], 0.0)).unwrap();
        assert_eq!(e, vec![0.3, -2.0]);
        // x1 frozen at 1 while the second segment flows x1 ∂2
        let e = m.endpoint(&[0.0, 0.0], &path(&[(0.5, [2.0, 0.0]), (0.5, [0.0, 2.0])], 2.0)).unwrap();
        assert_eq!(e, vec![1.0, 1.0]);
        // one segment with both controls: x1 = t, x2 = ∫ b2 (b1 s) ds = b1 b2 / 2
        let e = m.endpoint(&[0.0, 0.0], &path(&[(1.0, [1.5, 2.0])], 2.0)).unwrap();
        assert!((e[0] - 1.5).abs() < 1e-15 && (e[1] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn horizontal_distance() {
        let m = ControlMetric::new(&grushin(), DistanceConfig { tol: 1e-4, ..Default::default() }).unwrap();
        let d = m.distance(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((d.upper - 1.0).abs() < 1e-3, "{d:?}");
        assert!(d.lower <= d.upper);
        d.path.validate(m.degrees()).unwrap();
        let e = m.endpoint(&[0.0, 0.0], &d.path).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-4 && e[1].abs() < 1e-8);
        assert_eq!(m.distance(&[0.5, 0.5], &[0.5, 0.5]).unwrap().upper, 0.0);
    }

    #[test]
    fn reach_box_contains_endpoints() {
        let m = ControlMetric::new(&grushin(), DistanceConfig::default()).unwrap();
        let half = m.reach_box(&[1.0, 0.0], 0.5).unwrap();
        // |x1 - 1| ≤ 0.5, |x2| ≤ 0.5 (1 + 0.5)
        assert!((half[0] - 0.5).abs() < 1e-15 && (half[1] - 0.75).abs() < 1e-15);
        let e = m
            .endpoint(&[1.0, 0.0], &path(&[(1.0, [0.5, 0.5])], 0.5))
            .unwrap();
        assert!((e[0] - 1.0).abs() <= half[0] && e[1].abs() <= half[1]);
    }

    #[test]
    fn bracket_volume_grushin() {
        let b = BracketVolume::new(&grushin()).unwrap();
        // X1, X2, [X1, X2] = ∂2
        assert_eq!(b.len(), 3);
        let v = b.eval(&[2.0, 5.0], 0.5);
        assert!((v - (2.0 * 0.25 + 0.125)).abs() < 1e-15);
    }

    #[test]
    fn words() {
        assert_eq!(words_of_weight(&[1, 1], 0), vec![MultiIndex(vec![])]);
        assert_eq!(words_of_weight(&[1, 1], 2).len(), 4);
        assert_eq!(words_of_weight(&[1, 2], 2).len(), 2);
    }

    #[test]
    fn wilson_interval() {
        let (lo, hi) = wilson(50, 100);
        assert!(lo < 0.5 && hi > 0.5 && (0.5 - lo - (hi - 0.5)).abs() < 1e-12);
        let (lo, hi) = wilson(0, 10);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0);
    }
}
