//! Fundamental solutions of operators built on lifted fields.
//!
//! A kernel `Γ̃₀` for the lifted operator on the group `R^N` is saturated
//! over the extra variables:
//! `Γ(x, y) = ∫_{R^p} Γ̃₀((y,0)⁻¹ ⋆ (x,ξ)) dξ`.
//! The integral is taken in the variable `ζ = Ψ_{x,y}(ξ)` (unit Jacobian),
//! in which the last `p` components of the kernel argument are exactly `ζ`.
//! That makes the decay `|Γ̃₀| ≤ C ρ^{ν−Q}` usable on dyadic shells of `ζ`:
//! the shells are integrated adaptively until the remaining geometric tail,
//! bounded in closed form, is below tolerance.

use std::cell::Cell;
use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactpoly::{rational_from_f64, CompiledPoly, Polynomial, Rational};
use crate::fields::{operator_transpose, DiffOperator, MultiIndex, OperatorSpec};
use crate::lifting::{slice_diffeos, GroupLaw, LiftedSystem};
use crate::linalg::Matrix;
use crate::quadrature::{faces, integrate_polar_shell, poly_abs_bound, polar_point, PolyBump, QuadratureConfig};
use crate::scalar::{Jet, Scalar};

/// A kernel on the lifted group, known up to a constant factor.
pub trait KernelShape: Send + Sync + std::fmt::Debug {
    fn name(&self) -> String;
    fn eval(&self, z: &[f64]) -> f64;
    /// Evaluation on jets, giving directional derivatives. `None` if the
    /// shape cannot propagate sensitivities.
    fn eval_jet(&self, _z: &[Jet]) -> Option<Jet> {
        None
    }
}

/// `(|v|^4 + κ t^2)^{(2−Q)/4}` in exponential coordinates, for a step-two
/// algebra with one-dimensional centre whose bracket matrix `C` satisfies
/// `CᵀC = s I`. This is the shape of the sublaplacian kernel on such
/// (Heisenberg-type) groups, with `κ = 16 / s`.
#[derive(Clone, Debug)]
pub struct HeisenbergGauge {
    theta_inv: Vec<CompiledPoly>,
    generators: Vec<usize>,
    center: usize,
    kappa: f64,
    exponent: f64,
}

impl HeisenbergGauge {
    pub fn for_lift(lifted: &LiftedSystem, op: &OperatorSpec) -> Result<Self> {
        let alg = lifted.algebra();
        let unavailable = |why: &str| Err(Error::KernelUnavailable(why.to_string()));
        if alg.step() != 2 {
            return unavailable("the gauge kernel needs a step-two algebra");
        }
        let gens = alg.generator_indices().to_vec();
        let m = gens.len();
        if gens.iter().any(|g| alg.degrees()[*g] != 1) {
            return unavailable("all generators must have degree one");
        }
        let centre: Vec<usize> = (0..alg.dim()).filter(|k| !gens.contains(k)).collect();
        if centre.len() != 1 || alg.degrees()[centre[0]] != 2 {
            return unavailable("the centre must be one-dimensional of degree two");
        }
        let center = centre[0];
        let is_sublaplacian = op.num_terms() == m
            && op
                .terms()
                .all(|(w, c)| w.0.len() == 2 && w.0[0] == w.0[1] && c == &Rational::one());
        if !is_sublaplacian {
            return unavailable("the operator must be the sum of squares of the generators");
        }
        let sc = alg.structure_constants();
        let c: Matrix = gens
            .iter()
            .map(|&a| gens.iter().map(|&b| sc.get(a, b, center)).collect())
            .collect();
        let mut s = None;
        for i in 0..m {
            for j in 0..m {
                let mut acc = Rational::zero();
                for row in &c {
                    acc += &row[i] * &row[j];
                }
                if i == j {
                    match &s {
                        None => s = Some(acc),
                        Some(v) if *v != acc => return unavailable("bracket matrix is not a multiple of an orthogonal one"),
                        _ => {}
                    }
                } else if !acc.is_zero() {
                    return unavailable("bracket matrix is not a multiple of an orthogonal one");
                }
            }
        }
        let s = s.unwrap_or_else(Rational::zero);
        if s.is_zero() {
            return unavailable("degenerate bracket");
        }
        let big_q = m as u32 + 2;
        if lifted.big_q() != big_q {
            return unavailable("lifted homogeneous dimension does not match the group");
        }
        Ok(HeisenbergGauge {
            theta_inv: lifted.theta_inv().iter().map(|p| p.compile()).collect(),
            generators: gens,
            center,
            kappa: 16.0 / crate::exactpoly::to_f64(&s),
            exponent: (2.0 - big_q as f64) / 4.0,
        })
    }

    fn shape<S: Scalar>(&self, z: &[S]) -> S {
        let w: Vec<S> = self.theta_inv.iter().map(|p| p.eval_scalar(z)).collect();
        let mut v2 = S::from_f64(0.0);
        for g in &self.generators {
            v2 = v2 + w[*g].clone() * w[*g].clone();
        }
        let t = w[self.center].clone();
        (v2.clone() * v2 + (t.clone() * t).scale(self.kappa)).powf(self.exponent)
    }
}

impl KernelShape for HeisenbergGauge {
    fn name(&self) -> String {
        format!("heisenberg-gauge(kappa={}, exponent={})", self.kappa, self.exponent)
    }
    fn eval(&self, z: &[f64]) -> f64 {
        self.shape(z)
    }
    fn eval_jet(&self, z: &[Jet]) -> Option<Jet> {
        Some(self.shape(z))
    }
}

/// `z ↦ K(z⁻¹)`: the kernel of the transposed operator.
#[derive(Clone, Debug)]
struct InverseArg {
    inner: Arc<dyn KernelShape>,
    law: GroupLaw,
}

impl KernelShape for InverseArg {
    fn name(&self) -> String {
        format!("inverse-argument({})", self.inner.name())
    }
    fn eval(&self, z: &[f64]) -> f64 {
        self.inner.eval(&self.law.invert_f64(z))
    }
    fn eval_jet(&self, z: &[Jet]) -> Option<Jet> {
        self.inner.eval_jet(&self.law.invert(z))
    }
}

/// A calibrated kernel `c · shape` of homogeneity degree `ν − Q`.
#[derive(Clone, Debug)]
pub struct KernelSpec {
    shape: Arc<dyn KernelShape>,
    constant: f64,
    degree: i64,
}

impl KernelSpec {
    pub fn new(shape: Arc<dyn KernelShape>, constant: f64, degree: i64) -> Self {
        KernelSpec { shape, constant, degree }
    }

    pub fn name(&self) -> String {
        self.shape.name()
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// `ν − Q`.
    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn scaled(&self, factor: f64) -> KernelSpec {
        KernelSpec {
            constant: self.constant * factor,
            ..self.clone()
        }
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.constant * self.shape.eval(z)
    }

    pub fn eval_jet(&self, z: &[Jet]) -> Option<Jet> {
        self.shape.eval_jet(z).map(|j| j.scale(self.constant))
    }

    pub fn supports_jets(&self, dim: usize) -> bool {
        let z: Vec<Jet> = (0..dim).map(|_| Jet::variable(1.0, 0, 1)).collect();
        self.shape.eval_jet(&z).is_some()
    }

    /// `z ↦ Γ̃₀(z⁻¹)`, the kernel of the transposed lifted operator.
    pub fn transposed(&self, law: &GroupLaw) -> KernelSpec {
        KernelSpec {
            shape: Arc::new(InverseArg {
                inner: self.shape.clone(),
                law: law.clone(),
            }),
            constant: self.constant,
            degree: self.degree,
        }
    }
}

/// Derivative `X̃_{i_1} … X̃_{i_s} K` at `z`, through
/// `∂_{t_1} … ∂_{t_s} K(z ⋆ γ_{i_1}(t_1) ⋆ … ⋆ γ_{i_s}(t_s))` at `t = 0`.
/// Returns the value and whether the finite-difference fallback was used.
pub fn kernel_word_eval(lifted: &LiftedSystem, kernel: &KernelSpec, word: &[usize], z: &[f64]) -> (f64, bool) {
    if word.is_empty() {
        return (kernel.eval(z), false);
    }
    let s = word.len();
    let mut zj: Vec<Jet> = z.iter().map(|v| Jet::constant(*v)).collect();
    for (k, &i) in word.iter().enumerate() {
        let curve = lifted.generator_curve(i, Jet::variable(0.0, k, s));
        zj = lifted.law().multiply(&zj, &curve);
    }
    if let Some(j) = kernel.eval_jet(&zj) {
        return (j.top(), false);
    }
    (finite_difference(lifted, kernel, word, z), true)
}

fn finite_difference(lifted: &LiftedSystem, kernel: &KernelSpec, word: &[usize], z: &[f64]) -> f64 {
    if word.is_empty() {
        return kernel.eval(z);
    }
    let i = word[0];
    let rho = lifted.hom_norm().eval(z).max(1e-300);
    let h = (1e-3 * rho).powi(lifted.degrees()[i] as i32);
    let plus = lifted.law().multiply_f64(z, &lifted.generator_curve(i, h));
    let minus = lifted.law().multiply_f64(z, &lifted.generator_curve(i, -h));
    (finite_difference(lifted, kernel, &word[1..], &plus) - finite_difference(lifted, kernel, &word[1..], &minus))
        / (2.0 * h)
}

/// Sample points on the unit sphere of the box gauge of `R^dim`.
fn sphere_samples(exps: &[u32], seed: u64, random: usize) -> Vec<Vec<f64>> {
    let dim = exps.len();
    let per_face_budget = 20_000 / (2 * dim).max(1);
    let mut g = 9usize;
    while dim > 1 && g > 2 && g.pow(dim as u32 - 1) > per_face_budget {
        g -= 1;
    }
    let grid: Vec<f64> = (0..g).map(|k| -1.0 + 2.0 * k as f64 / (g - 1) as f64).collect();
    let mut out = Vec::new();
    for face in faces(dim) {
        let mut idx = vec![0usize; dim.saturating_sub(1)];
        loop {
            let rest: Vec<f64> = idx.iter().map(|k| grid[*k]).collect();
            out.push(polar_point(exps, face, 1.0, &rest));
            let mut carry = 0;
            while carry < idx.len() {
                idx[carry] += 1;
                if idx[carry] < g {
                    break;
                }
                idx[carry] = 0;
                carry += 1;
            }
            if carry == idx.len() {
                break;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs = faces(dim);
    for _ in 0..random {
        let face = fs[rng.gen_range(0..fs.len())];
        let rest: Vec<f64> = (0..dim - 1).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        out.push(polar_point(exps, face, 1.0, &rest));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityResidual {
    pub pole: Vec<f64>,
    pub integral: f64,
    pub phi_at_pole: f64,
    /// `|∫ Γ̃₀(p⁻¹⋆z) L̃*φ(z) dz + φ(p)| / |φ(p)|`
    pub residual: f64,
    pub quad_error: f64,
    pub evaluations: usize,
}

/// The left-inverse identity of a lifted kernel, with a product bump of
/// scale `scale` centred at the pole.
pub fn lifted_identity(
    kernel: &KernelSpec,
    lifted: &LiftedSystem,
    op: &OperatorSpec,
    pole: &[f64],
    scale: f64,
    cfg: &QuadratureConfig,
) -> Result<IdentityResidual> {
    let nn = lifted.big_n();
    if pole.len() != nn {
        return Err(Error::DimensionMismatch {
            expected: nn,
            got: pole.len(),
        });
    }
    let exps = lifted.exponents();
    let widths: Vec<f64> = exps.iter().map(|e| scale.powi(*e as i32)).collect();
    let bump = PolyBump::new(pole, &widths, op.degree() + 6)?;
    let lt = operator_transpose(op, lifted.lifted_fields(), lifted.degrees())?;
    let g = bump.apply(&DiffOperator::from_operator(lifted.lifted_fields(), &lt))?;
    let law = lifted.law();
    // radius of the support seen from the pole
    let p_exact: Vec<Rational> = bump
        .center_f64()
        .iter()
        .map(|v| rational_from_f64(*v))
        .collect::<Result<_>>()?;
    let p_inv: Vec<Polynomial> = law
        .invert_exact(&p_exact)?
        .into_iter()
        .map(|c| Polynomial::constant(nn, c))
        .collect();
    let z: Vec<Polynomial> = (0..nn).map(|i| Polynomial::var(nn, i)).collect();
    let u = law.multiply_poly(&p_inv, &z)?;
    let (lo, hi) = bump.support();
    let r_max = u
        .iter()
        .zip(&exps)
        .map(|(c, e)| poly_abs_bound(c, &lo, &hi).powf(1.0 / *e as f64))
        .fold(0.0, f64::max)
        * (1.0 + 1e-9);
    let pole_v = bump.center_f64();
    let f = |_r: f64, w: &[f64]| {
        let zz = law.multiply_f64(&pole_v, w);
        let gv = g.eval(&zz);
        if gv == 0.0 {
            0.0
        } else {
            kernel.eval(w) * gv
        }
    };
    let res = integrate_polar_shell(&f, &exps, 0.0, r_max, cfg);
    if !res.converged || !res.value.is_finite() {
        return Err(Error::Quadrature(format!(
            "left-inverse identity at pole {pole:?}: estimate {} with error {}",
            res.value, res.error
        )));
    }
    let phi = bump.eval(&pole_v);
    Ok(IdentityResidual {
        pole: pole.to_vec(),
        integral: res.value,
        phi_at_pole: phi,
        residual: (res.value + phi).abs() / phi.abs(),
        quad_error: res.error,
        evaluations: res.evaluations,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CalibrationReport {
    pub constant: f64,
    pub homogeneity_deviation: f64,
    /// `max |L̃K| / Σ|c_I X̃_I K|` at sampled points, when jets are available.
    pub annihilation_residual: Option<f64>,
    pub reference: IdentityResidual,
}

/// Fix the constant of a kernel shape by the identity
/// `∫ Γ̃₀ L̃*φ = −φ(0)` for a reference bump.
pub fn kernel_calibrate(
    shape: Arc<dyn KernelShape>,
    lifted: &LiftedSystem,
    op: &OperatorSpec,
    cfg: &QuadratureConfig,
) -> Result<(KernelSpec, CalibrationReport)> {
    let degree = op.degree() as i64 - lifted.big_q() as i64;
    let raw = KernelSpec::new(shape, 1.0, degree);
    let exps = lifted.exponents();
    let samples = sphere_samples(&exps, 11, 40);
    let mut dev: f64 = 0.0;
    for w in samples.iter().step_by(7) {
        let base = raw.eval(w);
        for lambda in [0.5f64, 2.0, 3.0] {
            let zl: Vec<f64> = w.iter().zip(&exps).map(|(v, e)| v * lambda.powi(*e as i32)).collect();
            let expect = lambda.powi(degree as i32) * base;
            dev = dev.max((raw.eval(&zl) - expect).abs() / expect.abs().max(f64::MIN_POSITIVE));
        }
    }
    if !(dev <= 1e-9) {
        return Err(Error::Calibration(format!(
            "kernel shape is not homogeneous of degree {degree} (relative deviation {dev:.3e})"
        )));
    }
    let annihilation = if raw.supports_jets(lifted.big_n()) {
        let mut worst: f64 = 0.0;
        for w in samples.iter().step_by(11) {
            let mut sum = 0.0;
            let mut scale = 0.0;
            for (word, c) in op.terms() {
                let (v, _) = kernel_word_eval(lifted, &raw, &word.0, w);
                let t = crate::exactpoly::to_f64(c) * v;
                sum += t;
                scale += t.abs();
            }
            worst = worst.max(sum.abs() / scale.max(f64::MIN_POSITIVE));
        }
        if worst > 1e-8 {
            return Err(Error::Calibration(format!(
                "kernel shape is not annihilated by the lifted operator away from the pole (residual {worst:.3e})"
            )));
        }
        Some(worst)
    } else {
        None
    };
    let origin = vec![0.0; lifted.big_n()];
    let reference = lifted_identity(&raw, lifted, op, &origin, 1.0, cfg)?;
    if reference.integral.abs() < 1e-300 {
        return Err(Error::Calibration("identity integral vanishes for every constant".into()));
    }
    let constant = -reference.phi_at_pole / reference.integral;
    let spec = raw.scaled(constant);
    let reference = IdentityResidual {
        integral: reference.integral * constant,
        residual: (reference.integral * constant + reference.phi_at_pole).abs() / reference.phi_at_pole.abs(),
        quad_error: reference.quad_error * constant.abs(),
        ..reference
    };
    Ok((
        spec,
        CalibrationReport {
            constant,
            homogeneity_deviation: dev,
            annihilation_residual: annihilation,
            reference,
        },
    ))
}

/// Result of one saturation integral.
#[derive(Clone, Debug, Serialize)]
pub struct GammaValue {
    pub value: f64,
    /// Quadrature error plus the analytic tail bound.
    pub error: f64,
    pub quad_error: f64,
    pub tail_bound: f64,
    /// Radius beyond which the tail is bounded, in the gauge of `ζ`.
    pub radius: f64,
    pub shells: usize,
    pub evaluations: usize,
    /// The kernel had no jets and derivatives used central differences.
    pub finite_difference: bool,
}

#[derive(Clone, Debug)]
pub struct SaturationEvaluator {
    lifted: LiftedSystem,
    kernel: KernelSpec,
    config: QuadratureConfig,
    nu: u32,
    arg: Vec<CompiledPoly>,
    sup_cache: Arc<Mutex<BTreeMap<Vec<usize>, f64>>>,
    max_shells: usize,
}

impl SaturationEvaluator {
    /// Requires `ν < q`: below it the saturated kernel is integrable.
    pub fn new(lifted: LiftedSystem, kernel: KernelSpec, nu: u32, config: QuadratureConfig) -> Result<Self> {
        let q = lifted.q();
        if nu >= q {
            return Err(Error::ExistenceHypothesis { nu, q });
        }
        if kernel.degree() != nu as i64 - lifted.big_q() as i64 {
            return Err(Error::InvalidArgument(format!(
                "kernel degree {} does not match nu - Q = {}",
                kernel.degree(),
                nu as i64 - lifted.big_q() as i64
            )));
        }
        let maps = slice_diffeos(&lifted)?;
        let arg = maps.integrand_arg.iter().map(|p| p.compile()).collect();
        Ok(SaturationEvaluator {
            lifted,
            kernel,
            config,
            nu,
            arg,
            sup_cache: Arc::new(Mutex::new(BTreeMap::new())),
            max_shells: 400,
        })
    }

    pub fn lifted(&self) -> &LiftedSystem {
        &self.lifted
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.config
    }

    pub fn with_config(&self, config: QuadratureConfig) -> Self {
        SaturationEvaluator {
            config,
            ..self.clone()
        }
    }

    /// Evaluator for the transposed operator, using `Γ̃₀*(z) = Γ̃₀(z⁻¹)`.
    pub fn transposed(&self) -> Self {
        SaturationEvaluator {
            kernel: self.kernel.transposed(self.lifted.law()),
            sup_cache: Arc::new(Mutex::new(BTreeMap::new())),
            ..self.clone()
        }
    }

    /// Sampled `sup |X̃_I Γ̃₀|` on the unit sphere of the box gauge, with a
    /// safety factor of two.
    fn sup_bound(&self, word: &[usize]) -> f64 {
        if let Some(v) = self.sup_cache.lock().expect("cache").get(word) {
            return *v;
        }
        let exps = self.lifted.exponents();
        let sup = sphere_samples(&exps, 0x5a7, 1000)
            .iter()
            .map(|w| kernel_word_eval(&self.lifted, &self.kernel, word, w).0.abs())
            .fold(0.0, f64::max);
        let v = 2.0 * sup;
        self.sup_cache.lock().expect("cache").insert(word.to_vec(), v);
        v
    }

    pub fn gamma_eval(&self, x: &[f64], y: &[f64]) -> Result<GammaValue> {
        self.saturate(&[], x, y, 0)
    }

    pub fn gamma_x_derivative(&self, word: &MultiIndex, x: &[f64], y: &[f64]) -> Result<GammaValue> {
        if word.0.iter().any(|i| *i >= self.lifted.degrees().len()) {
            return Err(Error::IndexOutOfRange {
                index: *word.0.iter().max().unwrap_or(&0),
                len: self.lifted.degrees().len(),
            });
        }
        self.saturate(&word.0, x, y, 0)
    }

    /// Saturation with `extra` additional dyadic shells beyond the ones
    /// the tail policy asks for.
    pub fn saturate(&self, word: &[usize], x: &[f64], y: &[f64], extra: usize) -> Result<GammaValue> {
        let n = self.lifted.n();
        let p = self.lifted.p();
        if x.len() != n || y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: if x.len() != n { x.len() } else { y.len() },
            });
        }
        if x == y {
            return Err(Error::Pole);
        }
        let sigma = self.lifted.sigma();
        let tau = self.lifted.tau();
        let weight: u32 = word.iter().map(|i| self.lifted.degrees()[*i]).sum();
        let excess = (self.lifted.q() + weight) as f64 - self.nu as f64;
        let e_sum = self.lifted.e() as f64;
        let gauge = |v: &[f64]| {
            v.iter()
                .zip(sigma)
                .map(|(a, s)| a.abs().powf(1.0 / *s as f64))
                .fold(0.0, f64::max)
        };
        let s0 = gauge(x).max(gauge(y)).max(gauge(&x.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>()));
        let core = 2.0 * s0;
        let c_sup = self.sup_bound(word);
        let tail = |r: f64| c_sup * 2f64.powi(p as i32) * e_sum * r.powf(-excess) / excess;

        let mut point: Vec<f64> = x.iter().chain(y).cloned().collect();
        point.extend(std::iter::repeat_n(0.0, p));
        let used_fd = Cell::new(false);
        let f = |_r: f64, zeta: &[f64]| {
            let mut pt = point.clone();
            pt[2 * n..].copy_from_slice(zeta);
            let v: Vec<f64> = self.arg.iter().map(|c| c.eval(&pt)).collect();
            let (val, fd) = kernel_word_eval(&self.lifted, &self.kernel, word, &v);
            if fd {
                used_fd.set(true);
            }
            val
        };
        let cfg = self.config;
        let first = integrate_polar_shell(&f, tau, 0.0, core, &cfg);
        let mut pieces = vec![first.value];
        let mut quad_err = first.error;
        let mut evals = first.evaluations;
        let mut converged = first.converged;
        let mut r = core;
        let mut shells = 0;
        let mut extra_left = extra;
        loop {
            let total: f64 = crate::quadrature::stable_sum(pieces.iter().cloned());
            let target = 0.1 * cfg.abs_tol.max(cfg.rel_tol * total.abs());
            if tail(r) <= target {
                if extra_left == 0 {
                    break;
                }
                extra_left -= 1;
            }
            if shells >= self.max_shells {
                return Err(Error::Quadrature(format!(
                    "tail bound {:.3e} still above target after {shells} shells",
                    tail(r)
                )));
            }
            let shell = integrate_polar_shell(&f, tau, r, 2.0 * r, &cfg);
            pieces.push(shell.value);
            quad_err += shell.error;
            evals += shell.evaluations;
            converged &= shell.converged;
            r *= 2.0;
            shells += 1;
        }
        let value = crate::quadrature::stable_sum(pieces.iter().cloned());
        // pieces may individually stall at roundoff; judge the total
        let converged = converged || quad_err <= cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if !converged || !value.is_finite() {
            return Err(Error::Quadrature(format!(
                "saturation integral at x = {x:?}, y = {y:?} did not converge (estimate {value}, error {quad_err:.3e})"
            )));
        }
        let tb = tail(r);
        Ok(GammaValue {
            value,
            error: quad_err + tb,
            quad_error: quad_err,
            tail_bound: tb,
            radius: r,
            shells,
            evaluations: evals,
            finite_difference: used_fd.get(),
        })
    }

    fn dilate(&self, lambda: f64, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lifted.sigma())
            .map(|(v, s)| v * lambda.powi(*s as i32))
            .collect()
    }

    /// `max |Γ(δ_λx, δ_λy) − λ^{ν−q} Γ(x,y)| / |Γ(x,y)|`, optionally for a
    /// derivative word (exponent `ν − q − |I|`).
    pub fn verify_homogeneity(
        &self,
        word: &[usize],
        pairs: &[(Vec<f64>, Vec<f64>)],
        lambdas: &[f64],
    ) -> Result<f64> {
        let weight: i32 = word.iter().map(|i| self.lifted.degrees()[*i] as i32).sum();
        let expo = self.nu as i32 - self.lifted.q() as i32 - weight;
        let devs: Vec<Result<f64>> = pairs
            .par_iter()
            .map(|(x, y)| {
                let base = self.saturate(word, x, y, 0)?.value;
                let mut worst: f64 = 0.0;
                for &l in lambdas {
                    let v = self.saturate(word, &self.dilate(l, x), &self.dilate(l, y), 0)?.value;
                    worst = worst.max((v - l.powi(expo) * base).abs() / base.abs());
                }
                Ok(worst)
            })
            .collect();
        let mut worst: f64 = 0.0;
        for d in devs {
            worst = worst.max(d?);
        }
        Ok(worst)
    }

    /// Largest relative gaps `|Γ(x,y) − Γ(y,x)|` and `|Γ*(x,y) − Γ(y,x)|`.
    pub fn symmetry_check(&self, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<SymmetryReport> {
        let star = self.transposed();
        let mut direct: f64 = 0.0;
        let mut transposed: f64 = 0.0;
        for (x, y) in pairs {
            let a = self.gamma_eval(x, y)?.value;
            let b = self.gamma_eval(y, x)?.value;
            let s = star.gamma_eval(x, y)?.value;
            direct = direct.max((a - b).abs() / b.abs());
            transposed = transposed.max((s - b).abs() / b.abs());
        }
        Ok(SymmetryReport {
            swapped_max_rel: direct,
            transposed_max_rel: transposed,
            pairs: pairs.len(),
        })
    }

    /// Doubling the truncation radius must move the value by less than
    /// the reported error.
    pub fn tail_doubling(&self, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<Vec<TailDoubling>> {
        pairs
            .iter()
            .map(|(x, y)| {
                let a = self.saturate(&[], x, y, 0)?;
                let b = self.saturate(&[], x, y, 1)?;
                Ok(TailDoubling {
                    x: x.clone(),
                    y: y.clone(),
                    value: a.value,
                    doubled: b.value,
                    change: (a.value - b.value).abs(),
                    reported_error: a.error,
                    ok: (a.value - b.value).abs() <= a.error,
                })
            })
            .collect()
    }

    /// `∫ Γ(x,y) L*φ(x) dx + φ(y)` for a bump centred at `y` of scale
    /// `scale`, integrated in polar coordinates around `y`.
    pub fn verify_left_inverse(
        &self,
        op: &OperatorSpec,
        y: &[f64],
        scale: f64,
        outer: &QuadratureConfig,
    ) -> Result<LeftInverseReport> {
        let n = self.lifted.n();
        let widths: Vec<f64> = self.lifted.sigma().iter().map(|s| scale.powi(*s as i32)).collect();
        let bump = PolyBump::new(y, &widths, op.degree() + 6)?;
        self.left_inverse_with(op, &bump, outer, n)
    }

    pub fn left_inverse_with(
        &self,
        op: &OperatorSpec,
        bump: &PolyBump,
        outer: &QuadratureConfig,
        n: usize,
    ) -> Result<LeftInverseReport> {
        let base = self.lifted.base_fields();
        let lt = operator_transpose(op, base, self.lifted.degrees())?;
        let g = bump.apply(&DiffOperator::from_operator(base, &lt))?;
        let y = bump.center_f64();
        let phi_y = bump.eval(&y);
        if g.is_zero() && phi_y == 0.0 {
            return Ok(LeftInverseReport {
                y,
                integral: 0.0,
                phi_at_y: 0.0,
                residual: 0.0,
                quad_error: 0.0,
                evaluations: 0,
            });
        }
        let (lo, hi) = bump.support();
        let r_max = lo
            .iter()
            .zip(&hi)
            .zip(&y)
            .map(|((a, b), c)| (a - c).abs().max((b - c).abs()))
            .fold(0.0, f64::max);
        // inner values only need to be well below the outer tolerance
        let inner = self.with_config(QuadratureConfig {
            rel_tol: self.config.rel_tol.max(1e-3 * outer.rel_tol),
            ..self.config
        });
        let failure: Cell<Option<Error>> = Cell::new(None);
        let ones = vec![1u32; n];
        let f = |_r: f64, d: &[f64]| {
            let x: Vec<f64> = y.iter().zip(d).map(|(a, b)| a + b).collect();
            let gv = g.eval(&x);
            if gv == 0.0 {
                return 0.0;
            }
            match inner.gamma_eval(&x, &y) {
                Ok(v) => v.value * gv,
                Err(e) => {
                    failure.set(Some(e));
                    0.0
                }
            }
        };
        let res = integrate_polar_shell(&f, &ones, 0.0, r_max, outer);
        if let Some(e) = failure.take() {
            return Err(e);
        }
        if !res.converged {
            return Err(Error::Quadrature(format!(
                "outer left-inverse integral did not converge (estimate {}, error {:.3e})",
                res.value, res.error
            )));
        }
        Ok(LeftInverseReport {
            y: y.clone(),
            integral: res.value,
            phi_at_y: phi_y,
            residual: (res.value + phi_y).abs(),
            quad_error: res.error,
            evaluations: res.evaluations,
        })
    }

    /// `Γ` on a list of pairs as CSV with columns `x1..xn,y1..yn,gamma,error`.
    pub fn gamma_csv(&self, pairs: &[(Vec<f64>, Vec<f64>)], word: &[usize]) -> Result<String> {
        let n = self.lifted.n();
        let mut out = String::new();
        let header: Vec<String> = (1..=n)
            .map(|i| format!("x{i}"))
            .chain((1..=n).map(|i| format!("y{i}")))
            .chain(["gamma".to_string(), "error".to_string()])
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for (x, y) in pairs {
            let v = self.saturate(word, x, y, 0)?;
            let row: Vec<String> = x
                .iter()
                .chain(y)
                .map(|c| format!("{c}"))
                .chain([format!("{:.16e}", v.value), format!("{:.3e}", v.error)])
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryReport {
    pub swapped_max_rel: f64,
    pub transposed_max_rel: f64,
    pub pairs: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailDoubling {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub value: f64,
    pub doubled: f64,
    pub change: f64,
    pub reported_error: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LeftInverseReport {
    pub y: Vec<f64>,
    pub integral: f64,
    pub phi_at_y: f64,
    /// `|∫ Γ(x,y) L*φ(x) dx + φ(y)|`
    pub residual: f64,
    pub quad_error: f64,
    pub evaluations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub samples: usize,
    /// `max |Γ̃₀(z)| ϱ_D(z)^{Q−ν}` over samples with `ϱ_D(z) ∈ [1, 10^3]`.
    pub max_scaled: f64,
    /// Bound implied by the sup over the unit sphere and the equivalence
    /// of the box gauge with `ϱ_D`.
    pub bound: f64,
    pub ok: bool,
}

/// The kernel decays like `ϱ_D^{ν−Q}` at infinity.
pub fn decay_check(kernel: &KernelSpec, lifted: &LiftedSystem, count: usize, seed: u64) -> DecayReport {
    let exps = lifted.exponents();
    let norm = lifted.hom_norm();
    let nn = exps.len();
    let deg = kernel.degree() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs = faces(nn);
    let sup = sphere_samples(&exps, seed ^ 1, 500)
        .iter()
        .map(|w| kernel.eval(w).abs())
        .fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    let mut taken = 0;
    while taken < count {
        let face = fs[rng.gen_range(0..fs.len())];
        let rest: Vec<f64> = (0..nn - 1).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let omega = polar_point(&exps, face, 1.0, &rest);
        let rho_w = norm.eval(&omega);
        let target = 10f64.powf(rng.gen_range(0.0..3.0));
        let r = target / rho_w;
        let z: Vec<f64> = omega.iter().zip(&exps).map(|(v, e)| v * r.powi(*e as i32)).collect();
        let rho = norm.eval(&z);
        if !(1.0..=1e3).contains(&rho) {
            continue;
        }
        taken += 1;
        worst = worst.max(kernel.eval(&z).abs() * rho.powf(-deg));
    }
    // ϱ_D ≤ N ρ∞ on the unit sphere, and |K(ω)| ≤ sup there
    let bound = 2.0 * sup * (nn as f64).powf(-deg);
    DecayReport {
        samples: count,
        max_scaled: worst,
        bound,
        ok: worst.is_finite() && worst <= bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_standard_operator, DilationFamily, HomogeneousSystem, PolyVectorField, StandardOperator, StandardParams};
    use crate::lifting::build_lifting;

    fn grushin_lift() -> (LiftedSystem, OperatorSpec) {
        let sys = HomogeneousSystem::with_default_names(
            DilationFamily::new(vec![1, 2]).unwrap(),
            vec![
                PolyVectorField::coordinate(2, 0),
                PolyVectorField::new(vec![Polynomial::zero(2), Polynomial::var(2, 0)]).unwrap(),
            ],
        )
        .unwrap();
        let op = make_standard_operator(
            StandardOperator::SublaplacianPower,
            sys.degrees(),
            &StandardParams { nu0: 1, k: 1, drift: None },
        )
        .unwrap();
        (build_lifting(&sys).unwrap(), op)
    }

    #[test]
    fn gauge_kernel_is_harmonic_off_the_pole() {
        let (lifted, op) = grushin_lift();
        let shape = HeisenbergGauge::for_lift(&lifted, &op).unwrap();
        let k = KernelSpec::new(Arc::new(shape), 1.0, -2);
        for z in [[0.3, -1.2, 0.7], [1.0, 2.0, -0.5], [-0.2, 0.1, 0.05]] {
            let a = kernel_word_eval(&lifted, &k, &[0, 0], &z).0;
            let b = kernel_word_eval(&lifted, &k, &[1, 1], &z).0;
            assert!((a + b).abs() < 1e-9 * (a.abs() + b.abs()), "{a} {b}");
        }
    }

    #[test]
    fn jets_match_finite_differences() {
        let (lifted, op) = grushin_lift();
        let shape = HeisenbergGauge::for_lift(&lifted, &op).unwrap();
        let k = KernelSpec::new(Arc::new(shape), 1.0, -2);
        let z = [0.4, -0.3, 0.9];
        for word in [vec![0], vec![1], vec![0, 1]] {
            let j = kernel_word_eval(&lifted, &k, &word, &z).0;
            let fd = finite_difference(&lifted, &k, &word, &z);
            assert!((j - fd).abs() < 1e-5 * j.abs().max(1e-3), "{word:?}: {j} vs {fd}");
        }
    }

    #[test]
    fn gate_refuses_large_degree() {
        let (lifted, _) = grushin_lift();
        // q = 3, a fourth order operator has ν = 4 ≥ q
        let shape = Arc::new(HeisenbergGauge::for_lift(&lifted, &grushin_lift().1).unwrap());
        let k = KernelSpec::new(shape, 1.0, 0);
        let err = SaturationEvaluator::new(lifted, k, 4, QuadratureConfig::default()).unwrap_err();
        assert!(matches!(err, Error::ExistenceHypothesis { nu: 4, q: 3 }));
        assert!(err.to_string().contains("nu < q"));
    }
}
