//! Adaptive Gauss–Kronrod quadrature in one dimension and Genz–Malik
//! cubature in several, plus homogeneous "box-polar" coordinates and
//! polynomial bump test functions.
//!
//! Box-polar coordinates write `z = c ⋆ D_r(ω)` with `ω` on the unit sphere
//! of the box gauge `max_i |z_i|^{1/e_i}`. On the face `z_i = ±r^{e_i}` the
//! volume element is `e_i r^{Q-1} dr dω'`, where `ω'` ranges over the
//! remaining coordinates in `[-1, 1]`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_traits::{One, Signed, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactpoly::{rational_from_f64, CompiledPoly, Monomial, Polynomial, Rational};
use crate::fields::DiffOperator;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_subdivisions: 400,
        }
    }
}

impl QuadratureConfig {
    pub fn new(rel_tol: f64, abs_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(rel_tol > 0.0 && abs_tol > 0.0) || max_subdivisions == 0 {
            return Err(Error::InvalidArgument("quadrature tolerances must be positive".into()));
        }
        Ok(QuadratureConfig {
            rel_tol,
            abs_tol,
            max_subdivisions,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 15-point Kronrod panel. The integrand returns a value and its own
/// error, which is folded into the panel error.
fn gk15(f: &mut dyn FnMut(f64) -> (f64, f64), a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let (fc, ec) = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    let mut inner = WGK[7] * ec;
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, e1) = f(c - dx);
        let (f2, e2) = f(c + dx);
        k += WGK[j] * (f1 + f2);
        inner += WGK[j] * (e1 + e2);
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    let value = k * h;
    let err = ((k - g) * h).abs() + inner * h.abs();
    (value, err)
}

/// Globally adaptive integration of `f` over `[a, b]`, splitting the panel
/// with the largest error estimate first.
pub fn integrate_with_error(f: &mut dyn FnMut(f64) -> (f64, f64), a: f64, b: f64, cfg: &QuadratureConfig) -> QuadResult {
    if a == b {
        return QuadResult {
            converged: true,
            ..Default::default()
        };
    }
    let mut evals = 15;
    let (v, e) = gk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, error: e });
    let mut total = v;
    let mut err = e;
    let mut splits = 0;
    loop {
        if !total.is_finite() || !err.is_finite() {
            return QuadResult {
                value: total,
                error: f64::INFINITY,
                evaluations: evals,
                converged: false,
            };
        }
        if err <= cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
            break;
        }
        if splits >= cfg.max_subdivisions {
            return QuadResult {
                value: total,
                error: err,
                evaluations: evals,
                converged: false,
            };
        }
        let p = heap.pop().expect("nonempty");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a.min(p.b) || m >= p.a.max(p.b) {
            // interval exhausted at machine precision
            heap.push(p);
            return QuadResult {
                value: total,
                error: err,
                evaluations: evals,
                converged: false,
            };
        }
        let (v1, e1) = gk15(f, p.a, m);
        let (v2, e2) = gk15(f, m, p.b);
        evals += 30;
        splits += 1;
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.error;
        heap.push(Panel { a: p.a, b: m, value: v1, error: e1 });
        heap.push(Panel { a: m, b: p.b, value: v2, error: e2 });
        if splits % 64 == 0 {
            // resum to avoid drift from incremental updates
            total = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.error).sum();
        }
    }
    let total: f64 = heap.iter().map(|p| p.value).sum();
    let err: f64 = heap.iter().map(|p| p.error).sum();
    QuadResult {
        value: total,
        error: err,
        evaluations: evals,
        converged: true,
    }
}

pub fn integrate(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, cfg: &QuadratureConfig) -> QuadResult {
    integrate_with_error(&mut |x| (f(x), 0.0), a, b, cfg)
}

/// Adaptive integration over a box: Gauss–Kronrod in one dimension,
/// Genz–Malik cubature in several. The absolute tolerance is raised to
/// `rel_tol` times a coarse estimate of `∫|f|`.
pub fn integrate_box(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], cfg: &QuadratureConfig) -> QuadResult {
    let scale = rough_abs(f, lo, hi);
    let cfg = QuadratureConfig {
        abs_tol: cfg.abs_tol.max(cfg.rel_tol * scale),
        ..*cfg
    };
    integrate_box_raw(f, lo, hi, &cfg)
}

fn integrate_box_raw(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], cfg: &QuadratureConfig) -> QuadResult {
    match lo.len() {
        0 => QuadResult {
            value: f(&[]),
            error: 0.0,
            evaluations: 1,
            converged: true,
        },
        1 => {
            let mut pt = [0.0];
            integrate(
                &mut |x| {
                    pt[0] = x;
                    f(&pt)
                },
                lo[0],
                hi[0],
                cfg,
            )
        }
        _ => genz_malik(f, lo, hi, cfg),
    }
}

struct Cell {
    center: Vec<f64>,
    half: Vec<f64>,
    value: f64,
    error: f64,
    split: usize,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Degree-7 rule with embedded degree-5 rule on one cell; also picks the
/// axis with the largest fourth difference for splitting.
fn gm_cell(f: &dyn Fn(&[f64]) -> f64, center: Vec<f64>, half: Vec<f64>) -> Cell {
    let d = center.len();
    let df = d as f64;
    let l2 = (9.0f64 / 70.0).sqrt();
    let l4 = (9.0f64 / 10.0).sqrt();
    let l5 = (9.0f64 / 19.0).sqrt();
    let w1 = (12824.0 - 9120.0 * df + 400.0 * df * df) / 19683.0;
    let w2 = 980.0 / 6561.0;
    let w3 = (1820.0 - 400.0 * df) / 19683.0;
    let w4 = 200.0 / 19683.0;
    let w5 = 6859.0 / 19683.0 / 2f64.powi(d as i32);
    let e1 = (729.0 - 950.0 * df + 50.0 * df * df) / 729.0;
    let e2 = 245.0 / 486.0;
    let e3 = (265.0 - 100.0 * df) / 1458.0;
    let e4 = 25.0 / 729.0;
    let ratio = (l2 * l2) / (l4 * l4);
    let vol: f64 = half.iter().map(|h| 2.0 * h).product();
    let mut p = center.clone();
    let f0 = f(&p);
    let (mut s2, mut s3, mut s4, mut s5) = (0.0, 0.0, 0.0, 0.0);
    let mut split = 0;
    let mut best = -1.0;
    for i in 0..d {
        p[i] = center[i] + l2 * half[i];
        let a = f(&p);
        p[i] = center[i] - l2 * half[i];
        let b = f(&p);
        p[i] = center[i] + l4 * half[i];
        let c = f(&p);
        p[i] = center[i] - l4 * half[i];
        let e = f(&p);
        p[i] = center[i];
        s2 += a + b;
        s3 += c + e;
        let diff = (a + b - 2.0 * f0 - ratio * (c + e - 2.0 * f0)).abs();
        if diff > best * (1.0 + 1e-12) || (diff >= best * (1.0 - 1e-12) && half[i] > half[split]) {
            best = diff;
            split = i;
        }
    }
    for i in 0..d {
        for j in i + 1..d {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                p[i] = center[i] + si * l4 * half[i];
                p[j] = center[j] + sj * l4 * half[j];
                s4 += f(&p);
            }
            p[i] = center[i];
            p[j] = center[j];
        }
    }
    for mask in 0..(1usize << d) {
        for i in 0..d {
            let sgn = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
            p[i] = center[i] + sgn * l5 * half[i];
        }
        s5 += f(&p);
    }
    let r7 = vol * (w1 * f0 + w2 * s2 + w3 * s3 + w4 * s4 + w5 * s5);
    let r5 = vol * (e1 * f0 + e2 * s2 + e3 * s3 + e4 * s4);
    Cell {
        center,
        half,
        value: r7,
        error: (r7 - r5).abs(),
        split,
    }
}

fn gm_points(d: usize) -> usize {
    1 + 4 * d + 2 * d * (d - 1) + (1 << d)
}

fn genz_malik(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], cfg: &QuadratureConfig) -> QuadResult {
    let d = lo.len();
    let per = gm_points(d);
    let max_evals = 4000 * per.max(1) * cfg.max_subdivisions.max(1) / 10;
    let center: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let half: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect();
    let mut heap = BinaryHeap::new();
    let first = gm_cell(f, center, half);
    let mut total = first.value;
    let mut err = first.error;
    heap.push(first);
    let mut evals = per;
    let mut splits = 0usize;
    let converged = loop {
        if !total.is_finite() || !err.is_finite() {
            break false;
        }
        if err <= cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
            break true;
        }
        if evals + 2 * per > max_evals {
            break false;
        }
        let c = heap.pop().expect("nonempty");
        let k = c.split;
        let mut h = c.half.clone();
        h[k] *= 0.5;
        let mut left = c.center.clone();
        left[k] -= h[k];
        let mut right = c.center.clone();
        right[k] += h[k];
        let a = gm_cell(f, left, h.clone());
        let b = gm_cell(f, right, h);
        evals += 2 * per;
        splits += 1;
        total += a.value + b.value - c.value;
        err += a.error + b.error - c.error;
        heap.push(a);
        heap.push(b);
        if splits % 256 == 0 {
            total = stable_sum(heap.iter().map(|c| c.value));
            err = heap.iter().map(|c| c.error).sum();
        }
    };
    QuadResult {
        value: stable_sum(heap.iter().map(|c| c.value)),
        error: heap.iter().map(|c| c.error).sum(),
        evaluations: evals,
        converged,
    }
}

/// `∫|f|` over a box by a fixed tensor Gauss rule.
pub fn rough_abs(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64]) -> f64 {
    let d = lo.len();
    // 7-point Gauss rule, or 3 points per axis in high dimension
    let (nodes, weights): (Vec<f64>, Vec<f64>) = if d <= 4 {
        let mut xs = vec![0.0];
        let mut ws = vec![WG[3]];
        for k in 0..3 {
            let x = XGK[2 * k + 1];
            xs.extend([-x, x]);
            ws.extend([WG[k], WG[k]]);
        }
        (xs, ws)
    } else {
        let x = (0.6f64).sqrt();
        (vec![-x, 0.0, x], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
    };
    let k = nodes.len();
    let total = k.pow(d as u32);
    let mut point = vec![0.0; d];
    let mut sum = 0.0;
    for idx in 0..total {
        let mut rem = idx;
        let mut w = 1.0;
        for j in 0..d {
            let t = rem % k;
            rem /= k;
            let c = 0.5 * (lo[j] + hi[j]);
            let h = 0.5 * (hi[j] - lo[j]);
            point[j] = c + h * nodes[t];
            w *= weights[t] * h.abs();
        }
        let v = f(&point);
        if v.is_finite() {
            sum += w * v.abs();
        }
    }
    sum
}

/// A face of the unit box sphere: coordinate `axis` equals `sign`.
#[derive(Clone, Copy, Debug)]
pub struct Face {
    pub axis: usize,
    pub sign: f64,
}

pub fn faces(dim: usize) -> Vec<Face> {
    (0..dim)
        .flat_map(|axis| [Face { axis, sign: 1.0 }, Face { axis, sign: -1.0 }])
        .collect()
}

/// Point `D_r(ω)` on a face, where `rest` fills the other coordinates.
pub fn polar_point(exps: &[u32], face: Face, r: f64, rest: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(exps.len());
    let mut k = 0;
    for (i, e) in exps.iter().enumerate() {
        let w = if i == face.axis {
            face.sign
        } else {
            let v = rest[k];
            k += 1;
            v
        };
        out.push(w * r.powi(*e as i32));
    }
    out
}

/// `∫ g(r, ω) dω` over the unit box sphere, where the caller's integrand
/// already includes the face factor `e_i` (see [`face_weight`]).
pub fn integrate_sphere(g: &dyn Fn(Face, &[f64]) -> f64, dim: usize, cfg: &QuadratureConfig) -> QuadResult {
    let mut out = QuadResult {
        converged: true,
        ..Default::default()
    };
    let lo = vec![-1.0; dim.saturating_sub(1)];
    let hi = vec![1.0; dim.saturating_sub(1)];
    for face in faces(dim) {
        let r = if dim == 1 {
            QuadResult {
                value: g(face, &[]),
                error: 0.0,
                evaluations: 1,
                converged: true,
            }
        } else {
            integrate_box(&|w| g(face, w), &lo, &hi, cfg)
        };
        out.value += r.value;
        out.error += r.error;
        out.evaluations += r.evaluations;
        out.converged &= r.converged;
    }
    out
}

pub fn face_weight(exps: &[u32], face: Face) -> f64 {
    exps[face.axis] as f64
}

/// `∫_{r0 ≤ ρ∞(z) ≤ r1} f(z) dz` in box-polar coordinates with exponents
/// `exps`. The integrand receives `r` and the point; the radial weight
/// `e_i r^{Q-1}` is applied here.
pub fn integrate_polar_shell(
    f: &dyn Fn(f64, &[f64]) -> f64,
    exps: &[u32],
    r0: f64,
    r1: f64,
    cfg: &QuadratureConfig,
) -> QuadResult {
    let dim = exps.len();
    let q: u32 = exps.iter().sum();
    let mut out = QuadResult {
        converged: true,
        ..Default::default()
    };
    let lo: Vec<f64> = std::iter::once(r0).chain(std::iter::repeat_n(-1.0, dim - 1)).collect();
    let hi: Vec<f64> = std::iter::once(r1).chain(std::iter::repeat_n(1.0, dim - 1)).collect();
    let integrands: Vec<_> = faces(dim)
        .into_iter()
        .map(|face| {
            let w = face_weight(exps, face);
            move |v: &[f64]| {
                let r = v[0];
                let z = polar_point(exps, face, r, &v[1..]);
                w * r.powi(q as i32 - 1) * f(r, &z)
            }
        })
        .collect();
    let scale: f64 = integrands.iter().map(|g| rough_abs(g, &lo, &hi)).sum();
    let face_cfg = QuadratureConfig {
        abs_tol: cfg.abs_tol.max(cfg.rel_tol * scale) / integrands.len() as f64,
        ..*cfg
    };
    for g in &integrands {
        let res = integrate_box_raw(g, &lo, &hi, &face_cfg);
        out.value += res.value;
        out.error += res.error;
        out.evaluations += res.evaluations;
        out.converged &= res.converged;
    }
    out
}

/// Product bump `Π (1 − ((z_i − c_i)/s_i)^2)^K` on the box `|z_i − c_i| < s_i`,
/// zero outside. It is `C^{K−1}` and polynomial on its support, so any
/// polynomial differential operator applied to it is again a polynomial
/// on the box.
#[derive(Clone, Debug)]
pub struct PolyBump {
    center: Vec<Rational>,
    half_widths: Vec<Rational>,
    power: u32,
}

impl PolyBump {
    pub fn new(center: &[f64], half_widths: &[f64], power: u32) -> Result<Self> {
        if center.len() != half_widths.len() {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                got: half_widths.len(),
            });
        }
        if half_widths.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidArgument("bump half-widths must be positive".into()));
        }
        let center: Vec<Rational> = center.iter().map(|c| rational_from_f64(*c)).collect::<Result<_>>()?;
        let half_widths: Vec<Rational> = half_widths.iter().map(|c| rational_from_f64(*c)).collect::<Result<_>>()?;
        Ok(PolyBump {
            center,
            half_widths,
            power,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    /// The bump expanded exactly as a polynomial.
    pub fn polynomial(&self) -> Polynomial {
        let n = self.center.len();
        let mut poly = Polynomial::one(n);
        for i in 0..n {
            // 1 − ((z − c)/s)^2
            let u = (&Polynomial::var(n, i) - &Polynomial::constant(n, self.center[i].clone()))
                .scale(&(Rational::one() / &self.half_widths[i]));
            let factor = &Polynomial::one(n) - &(&u * &u);
            poly = &poly * &factor.pow(self.power);
        }
        poly
    }

    pub fn center_f64(&self) -> Vec<f64> {
        self.center.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn support(&self) -> (Vec<f64>, Vec<f64>) {
        let c = self.center_f64();
        let s: Vec<f64> = self.half_widths.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect();
        (
            c.iter().zip(&s).map(|(a, b)| a - b).collect(),
            c.iter().zip(&s).map(|(a, b)| a + b).collect(),
        )
    }

    pub fn inside(&self, z: &[f64]) -> bool {
        let (lo, hi) = self.support();
        z.iter().zip(lo.iter().zip(&hi)).all(|(x, (a, b))| x > a && x < b)
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        if !self.inside(z) {
            return 0.0;
        }
        let prof = bump_profile(self.power);
        z.iter()
            .zip(self.center.iter().zip(&self.half_widths))
            .map(|(x, (c, w))| {
                let u = (x - c.to_f64().unwrap_or(f64::NAN)) / w.to_f64().unwrap_or(f64::NAN);
                horner(&prof, u)
            })
            .product()
    }

    /// `P φ` as a function supported on the same box, kept in factored
    /// form `Σ a_α(z) Π_i ∂^{α_i} b_i(z_i)`.
    pub fn apply(&self, op: &DiffOperator) -> Result<SupportedPoly> {
        if op.nvars() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: op.nvars(),
            });
        }
        let (lo, hi) = self.support();
        let max_order = op.terms().map(|(a, _)| a.0.iter().copied().max().unwrap_or(0)).max().unwrap_or(0);
        let mut derivs = vec![bump_profile(self.power)];
        for k in 1..=max_order as usize {
            let prev = &derivs[k - 1];
            derivs.push((1..prev.len()).map(|j| j as f64 * prev[j]).collect());
        }
        let terms = op
            .terms()
            .filter(|(_, a)| !a.is_zero())
            .map(|(alpha, a)| (alpha.0.clone(), a.compile()))
            .collect();
        Ok(SupportedPoly {
            terms,
            derivs,
            center: self.center_f64(),
            inv_width: self.half_widths.iter().map(|w| 1.0 / w.to_f64().unwrap_or(f64::NAN)).collect(),
            lo,
            hi,
        })
    }
}

/// Coefficients of `(1 − u²)^k` in powers of `u`.
fn bump_profile(k: u32) -> Vec<f64> {
    let mut c = vec![0.0; 2 * k as usize + 1];
    let mut binom = 1.0;
    for j in 0..=k as usize {
        c[2 * j] = if j % 2 == 0 { binom } else { -binom };
        binom = binom * (k as usize - j) as f64 / (j + 1) as f64;
    }
    c
}

fn horner(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * u + a)
}

/// A bump hit by a polynomial differential operator, restricted to the
/// open support box of the bump.
#[derive(Clone, Debug)]
pub struct SupportedPoly {
    terms: Vec<(Vec<u32>, CompiledPoly)>,
    /// `derivs[k]` holds the coefficients of the `k`-th derivative of the profile.
    derivs: Vec<Vec<f64>>,
    center: Vec<f64>,
    inv_width: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SupportedPoly {
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        if !z.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| x > a && x < b) {
            return 0.0;
        }
        let n = z.len();
        let u: Vec<f64> = (0..n).map(|i| (z[i] - self.center[i]) * self.inv_width[i]).collect();
        let mut acc = 0.0;
        for (alpha, a) in &self.terms {
            let mut t = a.eval(z);
            for i in 0..n {
                let k = alpha[i] as usize;
                t *= horner(&self.derivs[k], u[i]) * self.inv_width[i].powi(k as i32);
            }
            acc += t;
        }
        acc
    }
}

/// Upper bound of `|p|` over the box `[lo, hi]` by the coefficient sum.
pub fn poly_abs_bound(p: &Polynomial, lo: &[f64], hi: &[f64]) -> f64 {
    let m: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| a.abs().max(b.abs())).collect();
    p.terms()
        .map(|(mono, c): (&Monomial, &Rational)| {
            let cf = c.abs().to_f64().unwrap_or(f64::INFINITY);
            mono.0
                .iter()
                .zip(&m)
                .fold(cf, |acc, (e, x)| acc * x.powi(*e as i32))
        })
        .sum::<f64>()
        .max(if p.is_zero() { 0.0 } else { f64::MIN_POSITIVE })
}

/// Kahan–Babuška summation.
pub fn stable_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let cfg = QuadratureConfig::default();
        let r = integrate(&mut |x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, &cfg);
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-13);
        assert!(r.converged);
    }

    #[test]
    fn adapts_to_endpoint_singularity() {
        let cfg = QuadratureConfig::new(1e-10, 1e-14, 2000).unwrap();
        let r = integrate(&mut |x: f64| x.ln(), 0.0, 1.0, &cfg);
        assert!((r.value + 1.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn box_integral() {
        let cfg = QuadratureConfig::new(1e-10, 1e-14, 200).unwrap();
        let r = integrate_box(&|z| z[0] * z[0] * z[1].exp(), &[0.0, 0.0], &[1.0, 1.0], &cfg);
        let exact = (1.0f64.exp() - 1.0) / 3.0;
        assert!((r.value - exact).abs() < 1e-10);
    }

    #[test]
    fn cubature_matches_closed_forms() {
        let cfg = QuadratureConfig::new(1e-9, 1e-14, 2000).unwrap();
        let r = integrate_box(&|z| (z[0] + 2.0 * z[1] * z[2]).cos(), &[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0], &cfg);
        // ∫∫∫ cos(a + 2bc): integrate a first, then b, c numerically by series
        let oracle = {
            let inner = |b: f64, c: f64| (1.0 + 2.0 * b * c).sin() - (2.0 * b * c).sin();
            let n = 400;
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += inner((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
                }
            }
            s / (n * n) as f64
        };
        assert!((r.value - oracle).abs() < 1e-5, "{} vs {oracle}", r.value);
        assert!(r.converged);
        let vol = integrate_box(&|_| 1.0, &[0.0; 4], &[1.0, 2.0, 3.0, 4.0], &cfg);
        assert!((vol.value - 24.0).abs() < 1e-12);
    }

    #[test]
    fn polar_shell_volume() {
        // volume of {ρ∞ ≤ 1} with exponents (1,2) is 2·2 = 4
        let cfg = QuadratureConfig::default();
        let r = integrate_polar_shell(&|_, _| 1.0, &[1, 2], 0.0, 1.0, &cfg);
        assert!((r.value - 4.0).abs() < 1e-12, "{r:?}");
        // volume of {ρ∞ ≤ 2} is 2·2 · 2·4 / 4 = 2^Q · 4 = 32
        let r = integrate_polar_shell(&|_, _| 1.0, &[1, 2], 0.0, 2.0, &cfg);
        assert!((r.value - 32.0).abs() < 1e-10);
    }

    #[test]
    fn bump_values() {
        let b = PolyBump::new(&[1.0, 0.0], &[1.0, 1.0], 3).unwrap();
        assert_eq!(b.eval(&[1.0, 0.0]), 1.0);
        assert_eq!(b.eval(&[2.5, 0.0]), 0.0);
        assert!((b.eval(&[1.5, 0.5]) - 0.75f64.powi(6)).abs() < 1e-15);
    }

    #[test]
    fn factored_operator_matches_expansion() {
        use crate::fields::PolyVectorField;
        // X1 = ∂1, X2 = x1 ∂2; operator X1 X1 + X2 X2 + X2
        let fields = vec![
            PolyVectorField::coordinate(2, 0),
            PolyVectorField::new(vec![Polynomial::zero(2), Polynomial::var(2, 0)]).unwrap(),
        ];
        let mut op = DiffOperator::from_word(&fields, &crate::fields::MultiIndex(vec![0, 0]));
        op = op.add(&DiffOperator::from_word(&fields, &crate::fields::MultiIndex(vec![1, 1])));
        op = op.add(&DiffOperator::from_word(&fields, &crate::fields::MultiIndex(vec![1])));
        let b = PolyBump::new(&[0.5, -0.25], &[0.75, 1.5], 5).unwrap();
        let g = b.apply(&op).unwrap();
        let exact = op.apply(&b.polynomial()).unwrap().compile();
        for z in [[0.5, -0.25], [0.9, 0.3], [-0.1, -1.5], [1.1, 1.0]] {
            let (a, e) = (g.eval(&z), exact.eval(&z));
            assert!((a - e).abs() < 1e-11 * (1.0 + e.abs()), "{z:?}: {a} vs {e}");
        }
        assert_eq!(g.eval(&[1.3, 0.0]), 0.0);
    }
}
