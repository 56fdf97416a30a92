//! Lifting a homogeneous field system to left-invariant fields on a
//! homogeneous group.
//!
//! The Lie algebra `g = Lie(X)` of dimension `N` defines a group on `R^N`
//! through the BCH product in exponential coordinates `w`. The evaluation
//! map `F(w) = exp(Σ w_k W_k)(0)` intertwines the left-invariant field of
//! `W_k` with `W_k` itself, so in the coordinates `z = Θ(w) = (F(w), w_K)`
//! (for a suitable complementary set `K` of `p = N − n` indices) the
//! left-invariant field of a generator reads `X̃_i = X_i + R_i` with `R_i`
//! differentiating only in the last `p` coordinates.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bch::{bch_generic, MAX_STEP};
use crate::error::{Error, Result};
use crate::exactpoly::{int, rat, CompiledPoly, Monomial, Polynomial, Rational};
use crate::fields::{
    certify_with_exponents, operator_transpose, DiffOperator, HomogeneousSystem, OperatorSpec, PolyVectorField,
};
use crate::liealg::{generate_lie_algebra, hormander_rank, LieAlgebra};
use crate::linalg::{inverse, poly_det, Echelon, Matrix, SparseVec};
use crate::scalar::Scalar;

/// Coordinates of `nvars` variables starting at `offset` inside a ring of
/// `total` variables.
fn vars(total: usize, offset: usize, count: usize) -> Vec<Polynomial> {
    (0..count).map(|i| Polynomial::var(total, offset + i)).collect()
}

fn compose_all(polys: &[Polynomial], subs: &[Polynomial]) -> Result<Vec<Polynomial>> {
    polys.iter().map(|p| p.compose(subs)).collect()
}

/// `∂ polys_i / ∂ x_{offset + j}` for `j < count`.
fn jacobian(polys: &[Polynomial], offset: usize, count: usize) -> Result<Vec<Vec<Polynomial>>> {
    polys
        .iter()
        .map(|p| (0..count).map(|j| p.diff(offset + j)).collect())
        .collect()
}

/// Lie series `x_i ∘ exp(V)` for a field acting on the first `n` of the
/// ring's variables. Coefficients may involve the remaining variables,
/// which act as parameters.
pub fn lie_series_map(coeffs: &[Polynomial], n: usize, limit: usize) -> Result<Vec<Polynomial>> {
    let total = coeffs.first().map(|c| c.nvars()).unwrap_or(n);
    let apply = |u: &Polynomial| -> Result<Polynomial> {
        let mut out = Polynomial::zero(total);
        for (j, c) in coeffs.iter().enumerate().take(n) {
            if !c.is_zero() {
                out = &out + &(c * &u.diff(j)?);
            }
        }
        Ok(out)
    };
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut term = Polynomial::var(total, i);
        let mut sum = term.clone();
        let mut k = 1;
        loop {
            term = apply(&term)?.scale(&rat(1, k));
            if term.is_zero() {
                break;
            }
            sum = &sum + &term;
            k += 1;
            if k as usize > limit {
                return Err(Error::NonTerminatingSeries { limit });
            }
        }
        out.push(sum);
    }
    Ok(out)
}

/// Exact time-`t` flow of a polynomial field from a rational start point.
pub fn exp_flow(field: &PolyVectorField, start: &[Rational], t: &Rational) -> Result<Vec<Rational>> {
    let n = field.dim();
    if start.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: start.len(),
        });
    }
    let coeffs: Vec<Polynomial> = field.coeffs().iter().map(|c| c.scale(t)).collect();
    let map = lie_series_map(&coeffs, n, 64)?;
    map.iter().map(|p| p.eval(start)).collect()
}

/// Group law on `R^N` given by polynomials, with dilation exponents.
#[derive(Clone, Debug)]
pub struct GroupLaw {
    dim: usize,
    exponents: Vec<u32>,
    mult: Vec<Polynomial>,
    inverse: Vec<Polynomial>,
    compiled_mult: Vec<CompiledPoly>,
    compiled_inverse: Vec<CompiledPoly>,
}

impl GroupLaw {
    pub fn new(exponents: Vec<u32>, mult: Vec<Polynomial>, inverse: Vec<Polynomial>) -> Self {
        let dim = exponents.len();
        let compiled_mult = mult.iter().map(|p| p.compile()).collect();
        let compiled_inverse = inverse.iter().map(|p| p.compile()).collect();
        GroupLaw {
            dim,
            exponents,
            mult,
            inverse,
            compiled_mult,
            compiled_inverse,
        }
    }

    /// BCH law in exponential coordinates of the algebra's basis.
    pub fn from_algebra(alg: &LieAlgebra) -> Result<Self> {
        let n = alg.dim();
        let step = alg.step();
        if step > MAX_STEP {
            return Err(Error::Lifting(format!(
                "nilpotency step {step} exceeds the supported maximum {MAX_STEP}"
            )));
        }
        let a: Vec<Option<Polynomial>> = vars(2 * n, 0, n).into_iter().map(Some).collect();
        let b: Vec<Option<Polynomial>> = vars(2 * n, n, n).into_iter().map(Some).collect();
        let prod = bch_generic(alg.structure_constants(), step, &a, &b)?;
        let mult = prod
            .into_iter()
            .map(|c| c.unwrap_or_else(|| Polynomial::zero(2 * n)))
            .collect();
        let inverse = vars(n, 0, n).iter().map(|v| -v).collect();
        Ok(GroupLaw::new(alg.degrees().to_vec(), mult, inverse))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn mult_polys(&self) -> &[Polynomial] {
        &self.mult
    }

    pub fn inverse_polys(&self) -> &[Polynomial] {
        &self.inverse
    }

    pub fn multiply<S: Scalar>(&self, a: &[S], b: &[S]) -> Vec<S> {
        let ab: Vec<S> = a.iter().chain(b).cloned().collect();
        self.compiled_mult.iter().map(|p| p.eval_scalar(&ab)).collect()
    }

    pub fn multiply_f64(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let ab: Vec<f64> = a.iter().chain(b).cloned().collect();
        self.compiled_mult.iter().map(|p| p.eval(&ab)).collect()
    }

    pub fn invert<S: Scalar>(&self, a: &[S]) -> Vec<S> {
        self.compiled_inverse.iter().map(|p| p.eval_scalar(a)).collect()
    }

    pub fn invert_f64(&self, a: &[f64]) -> Vec<f64> {
        self.compiled_inverse.iter().map(|p| p.eval(a)).collect()
    }

    pub fn multiply_exact(&self, a: &[Rational], b: &[Rational]) -> Result<Vec<Rational>> {
        let ab: Vec<Rational> = a.iter().chain(b).cloned().collect();
        self.mult.iter().map(|p| p.eval(&ab)).collect()
    }

    pub fn invert_exact(&self, a: &[Rational]) -> Result<Vec<Rational>> {
        self.inverse.iter().map(|p| p.eval(a)).collect()
    }

    /// `a ⋆ b` for polynomial arguments in a common ring.
    pub fn multiply_poly(&self, a: &[Polynomial], b: &[Polynomial]) -> Result<Vec<Polynomial>> {
        let subs: Vec<Polynomial> = a.iter().chain(b).cloned().collect();
        compose_all(&self.mult, &subs)
    }

    pub fn invert_poly(&self, a: &[Polynomial]) -> Result<Vec<Polynomial>> {
        compose_all(&self.inverse, a)
    }

    /// Left-invariant field with value `v` at the identity:
    /// `Z(a) = ∂_b (a ⋆ b)|_{b=0} · v`.
    pub fn left_invariant_field(&self, v: &[Rational]) -> Result<PolyVectorField> {
        let n = self.dim;
        let mut subs = vars(n, 0, n);
        subs.extend(std::iter::repeat_n(Polynomial::zero(n), n));
        let mut coeffs = vec![Polynomial::zero(n); n];
        for (i, m) in self.mult.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                if vj.is_zero() {
                    continue;
                }
                let d = m.diff(n + j)?.compose(&subs)?;
                coeffs[i] = &coeffs[i] + &d.scale(vj);
            }
        }
        PolyVectorField::new(coeffs)
    }

    pub fn check_identity(&self) -> Result<bool> {
        let n = self.dim;
        let a = vars(n, 0, n);
        let zero = vec![Polynomial::zero(n); n];
        Ok(self.multiply_poly(&a, &zero)? == a && self.multiply_poly(&zero, &a)? == a)
    }

    pub fn check_inverse(&self) -> Result<bool> {
        let n = self.dim;
        let a = vars(n, 0, n);
        let inv = self.invert_poly(&a)?;
        let left = self.multiply_poly(&inv, &a)?;
        let right = self.multiply_poly(&a, &inv)?;
        Ok(left.iter().chain(&right).all(|p| p.is_zero()))
    }

    pub fn check_associativity(&self) -> Result<bool> {
        let n = self.dim;
        let a = vars(3 * n, 0, n);
        let b = vars(3 * n, n, n);
        let c = vars(3 * n, 2 * n, n);
        let ab = self.multiply_poly(&a, &b)?;
        let bc = self.multiply_poly(&b, &c)?;
        Ok(self.multiply_poly(&ab, &c)? == self.multiply_poly(&a, &bc)?)
    }

    /// `D_λ(a) ⋆ D_λ(b) = D_λ(a ⋆ b)` identically in `λ`: equivalent to each
    /// component being homogeneous of its exponent in `(a, b)`.
    pub fn check_dilation_automorphism(&self) -> bool {
        let doubled: Vec<u32> = self.exponents.iter().chain(&self.exponents).cloned().collect();
        self.mult
            .iter()
            .zip(&self.exponents)
            .all(|(p, e)| p.is_graded_homogeneous(&doubled, *e))
            && self
                .inverse
                .iter()
                .zip(&self.exponents)
                .all(|(p, e)| p.is_graded_homogeneous(&self.exponents, *e))
    }

    /// Jacobian of `b ↦ a ⋆ b` has determinant identically one.
    pub fn check_left_translation_jacobian(&self) -> Result<bool> {
        let n = self.dim;
        let j = jacobian(&self.mult, n, n)?;
        Ok(poly_det(&j, 2 * n) == Polynomial::one(2 * n))
    }

    /// The law in coordinates `z = Θ(w)`.
    pub fn transform(&self, theta: &[Polynomial], theta_inv: &[Polynomial], exponents: Vec<u32>) -> Result<GroupLaw> {
        let n = self.dim;
        let left: Vec<Polynomial> = theta_inv.iter().map(|p| p.extend(2 * n)).collect();
        let map_b: Vec<usize> = (n..2 * n).collect();
        let right: Vec<Polynomial> = theta_inv.iter().map(|p| p.remap(2 * n, &map_b)).collect();
        let prod_w = self.multiply_poly(&left, &right)?;
        let mult = compose_all(theta, &prod_w)?;
        let inv_w = self.invert_poly(theta_inv)?;
        let inverse = compose_all(theta, &inv_w)?;
        Ok(GroupLaw::new(exponents, mult, inverse))
    }
}

/// Homogeneous norm `ϱ(v) = Σ |v_i|^{1/ε_i}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomNorm {
    pub exponents: Vec<u32>,
}

impl HomNorm {
    pub fn new(exponents: Vec<u32>) -> Self {
        HomNorm { exponents }
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        hom_norm_eval(self, v)
    }
}

pub fn hom_norm_eval(norm: &HomNorm, v: &[f64]) -> f64 {
    v.iter()
        .zip(&norm.exponents)
        .map(|(x, e)| x.abs().powf(1.0 / *e as f64))
        .sum()
}

/// The lifted system together with the group it lives on.
#[derive(Clone, Debug)]
pub struct LiftedSystem {
    n: usize,
    p: usize,
    sigma: Vec<u32>,
    tau: Vec<u32>,
    base_fields: Vec<PolyVectorField>,
    degrees: Vec<u32>,
    names: Vec<String>,
    algebra: LieAlgebra,
    exp_law: GroupLaw,
    flow_map: Vec<Polynomial>,
    law: GroupLaw,
    lifted: Vec<PolyVectorField>,
    theta: Vec<Polynomial>,
    theta_inv: Vec<Polynomial>,
    theta_compiled: Vec<CompiledPoly>,
    theta_inv_compiled: Vec<CompiledPoly>,
    complement: Vec<usize>,
    shears: Vec<Polynomial>,
}

/// Outcome of one structural check.
#[derive(Clone, Debug, Serialize)]
pub struct StructuralCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl StructuralCheck {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        StructuralCheck {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl LiftedSystem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `N = n + p`.
    pub fn big_n(&self) -> usize {
        self.n + self.p
    }

    pub fn sigma(&self) -> &[u32] {
        &self.sigma
    }

    pub fn tau(&self) -> &[u32] {
        &self.tau
    }

    /// `(σ_1, …, σ_n, τ_1, …, τ_p)`.
    pub fn exponents(&self) -> Vec<u32> {
        self.sigma.iter().chain(&self.tau).cloned().collect()
    }

    pub fn q(&self) -> u32 {
        self.sigma.iter().sum()
    }

    pub fn e(&self) -> u32 {
        self.tau.iter().sum()
    }

    /// `Q = q + E`.
    pub fn big_q(&self) -> u32 {
        self.q() + self.e()
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn base_fields(&self) -> &[PolyVectorField] {
        &self.base_fields
    }

    pub fn lifted_fields(&self) -> &[PolyVectorField] {
        &self.lifted
    }

    pub fn algebra(&self) -> &LieAlgebra {
        &self.algebra
    }

    /// Group law in the lifted coordinates `z = (x, ξ)`.
    pub fn law(&self) -> &GroupLaw {
        &self.law
    }

    /// Group law in exponential coordinates.
    pub fn exp_law(&self) -> &GroupLaw {
        &self.exp_law
    }

    /// The evaluation map `F: R^N → R^n`.
    pub fn flow_map(&self) -> &[Polynomial] {
        &self.flow_map
    }

    pub fn theta(&self) -> &[Polynomial] {
        &self.theta
    }

    pub fn theta_inv(&self) -> &[Polynomial] {
        &self.theta_inv
    }

    /// Basis indices used as the extra coordinates.
    pub fn complement(&self) -> &[usize] {
        &self.complement
    }

    /// Graded shears `ξ_c ↦ ξ_c + h_c(x)` applied after `Θ`.
    pub fn shears(&self) -> &[Polynomial] {
        &self.shears
    }

    /// `R_i = X̃_i − X_i`, as a field on `R^N`.
    pub fn residual(&self, i: usize) -> PolyVectorField {
        let nn = self.big_n();
        let base = self.base_fields[i].extend(nn);
        self.lifted[i]
            .add(&base.scale(&-Rational::one()))
            .expect("same dimension")
    }

    pub fn theta_eval<S: Scalar>(&self, w: &[S]) -> Vec<S> {
        self.theta_compiled.iter().map(|p| p.eval_scalar(w)).collect()
    }

    pub fn theta_inv_eval<S: Scalar>(&self, z: &[S]) -> Vec<S> {
        self.theta_inv_compiled.iter().map(|p| p.eval_scalar(z)).collect()
    }

    pub fn theta_inv_f64(&self, z: &[f64]) -> Vec<f64> {
        self.theta_inv_compiled.iter().map(|p| p.eval(z)).collect()
    }

    /// One-parameter subgroup `t ↦ exp(t X̃_i)` in lifted coordinates.
    pub fn generator_curve<S: Scalar>(&self, i: usize, t: S) -> Vec<S> {
        let nn = self.big_n();
        let g = self.algebra.generator_indices()[i];
        let w: Vec<S> = (0..nn)
            .map(|k| if k == g { t.clone() } else { S::from_f64(0.0) })
            .collect();
        self.theta_eval(&w)
    }

    pub fn hom_norm(&self) -> HomNorm {
        HomNorm::new(self.exponents())
    }

    /// All structural identities, exactly.
    pub fn structural_checks(&self, seed: u64) -> Result<Vec<StructuralCheck>> {
        let mut out = Vec::new();
        let law = &self.law;
        out.push(StructuralCheck::new("group_identity", law.check_identity()?, "a*0 = 0*a = a"));
        out.push(StructuralCheck::new("group_inverse", law.check_inverse()?, "a^-1*a = a*a^-1 = 0"));
        out.push(StructuralCheck::new(
            "group_associativity",
            law.check_associativity()?,
            "(a*b)*c = a*(b*c) as polynomials",
        ));
        out.push(StructuralCheck::new(
            "dilation_automorphism",
            law.check_dilation_automorphism(),
            format!("exponents {:?}", law.exponents()),
        ));
        out.push(StructuralCheck::new(
            "left_translation_jacobian",
            law.check_left_translation_jacobian()?,
            "det d(a*b)/db = 1",
        ));
        let exps = self.exponents();
        let homog: Vec<Option<u32>> = self.lifted.iter().map(|f| certify_with_exponents(f, &exps)).collect();
        let homog_ok = homog.iter().zip(&self.degrees).all(|(h, d)| *h == Some(*d));
        out.push(StructuralCheck::new(
            "lifted_homogeneity",
            homog_ok,
            format!("certified degrees {homog:?}, expected {:?}", self.degrees),
        ));
        let mut res_ok = true;
        let mut details = Vec::new();
        for i in 0..self.lifted.len() {
            let r = self.residual(i);
            let x_only_zero = (0..self.n).all(|j| r.coeff(j).is_zero());
            let nonzero = !r.is_zero();
            res_ok &= x_only_zero && nonzero;
            details.push(format!("R{} = {}", i + 1, r));
        }
        out.push(StructuralCheck::new("residuals_xi_only_nonzero", res_ok, details.join("; ")));
        out.push(self.check_lifted_rank(seed)?);
        out.push(self.check_flow_compatibility(seed)?);
        Ok(out)
    }

    /// The lifted fields generate an `N`-dimensional algebra of rank `N` at
    /// sampled points.
    fn check_lifted_rank(&self, seed: u64) -> Result<StructuralCheck> {
        let nn = self.big_n();
        let fields = bracket_closure(&self.lifted, &self.exponents())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ranks = Vec::new();
        for k in 0..6 {
            let pt: Vec<Rational> = (0..nn)
                .map(|_| if k == 0 { int(0) } else { rat(rng.gen_range(-20..=20), rng.gen_range(1..=5)) })
                .collect();
            ranks.push(hormander_rank(&fields, &pt)?);
        }
        Ok(StructuralCheck::new(
            "lifted_span",
            fields.len() == nn && ranks.iter().all(|r| *r == nn),
            format!("dim Lie = {}, ranks {:?}, N = {}", fields.len(), ranks, nn),
        ))
    }

    /// Flowing `W(a)` then `W(b)` from the origin equals `F(a ⋆ b)`.
    fn check_flow_compatibility(&self, seed: u64) -> Result<StructuralCheck> {
        let nn = self.big_n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut ok = true;
        for _ in 0..5 {
            let a: Vec<Rational> = (0..nn).map(|_| rat(rng.gen_range(-6..=6), rng.gen_range(1..=3))).collect();
            let b: Vec<Rational> = (0..nn).map(|_| rat(rng.gen_range(-6..=6), rng.gen_range(1..=3))).collect();
            let origin = vec![Rational::zero(); self.n];
            let mid = exp_flow(&self.algebra.combination(&a), &origin, &Rational::one())?;
            let end = exp_flow(&self.algebra.combination(&b), &mid, &Rational::one())?;
            let ab = self.exp_law.multiply_exact(&a, &b)?;
            let f: Vec<Rational> = self.flow_map.iter().map(|p| p.eval(&ab)).collect::<Result<_>>()?;
            ok &= f == end;
        }
        Ok(StructuralCheck::new(
            "flow_bch_compatibility",
            ok,
            "exp(W(b)) exp(W(a)) 0 = F(a*b) on 5 random rational pairs",
        ))
    }

    /// `L̃(u∘π) == (Lu)∘π` exactly.
    pub fn lift_identity_check(&self, op: &OperatorSpec, u: &Polynomial) -> Result<bool> {
        if u.nvars() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: u.nvars(),
            });
        }
        let nn = self.big_n();
        let lifted_op = DiffOperator::from_operator(&self.lifted, op);
        let base_op = DiffOperator::from_operator(&self.base_fields, op);
        let lhs = lifted_op.apply(&u.extend(nn))?;
        let rhs = base_op.apply(u)?.extend(nn);
        Ok(lhs == rhs)
    }

    /// Lift identity on random polynomials of graded degree up to `3 σ_n`.
    pub fn lift_identity_suite(&self, op: &OperatorSpec, count: usize, seed: u64) -> Result<StructuralCheck> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let max_deg = 3 * self.sigma.iter().max().copied().unwrap_or(1);
        let monomials = monomials_up_to(&self.sigma, max_deg);
        let mut failures = 0;
        for _ in 0..count {
            let mut u = Polynomial::zero(self.n);
            for _ in 0..4 {
                let m = &monomials[rng.gen_range(0..monomials.len())];
                u.add_term(m.clone(), rat(rng.gen_range(-9..=9), rng.gen_range(1..=4)));
            }
            if !self.lift_identity_check(op, &u)? {
                failures += 1;
            }
        }
        Ok(StructuralCheck::new(
            "lift_identity",
            failures == 0,
            format!("{count} random polynomials of graded degree <= {max_deg}, {failures} failures"),
        ))
    }
}

/// Monomials in `x` of weighted degree at most `max`.
fn monomials_up_to(sigma: &[u32], max: u32) -> Vec<Monomial> {
    let n = sigma.len();
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(i: usize, left: u32, sigma: &[u32], cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if i == sigma.len() {
            out.push(Monomial(cur.clone()));
            return;
        }
        let mut e = 0;
        while e * sigma[i] <= left {
            cur[i] = e;
            rec(i + 1, left - e * sigma[i], sigma, cur, out);
            e += 1;
        }
        cur[i] = 0;
    }
    rec(0, max, sigma, &mut cur, &mut out);
    let _ = n;
    out
}

/// Monomials in `x` of weighted degree exactly `d`, in canonical order.
fn monomials_of_degree(sigma: &[u32], d: u32) -> Vec<Monomial> {
    let mut all: Vec<Monomial> = monomials_up_to(sigma, d)
        .into_iter()
        .filter(|m| m.weighted_degree(sigma) == d)
        .collect();
    all.sort();
    all
}

/// Bracket closure of arbitrary homogeneous fields under general exponents.
fn bracket_closure(gens: &[PolyVectorField], exponents: &[u32]) -> Result<Vec<PolyVectorField>> {
    let mut ech: Echelon<(usize, Monomial)> = Echelon::new();
    let mut basis: Vec<PolyVectorField> = Vec::new();
    for g in gens {
        if ech.insert(&g.to_sparse()) {
            basis.push(g.clone());
        }
    }
    let max_deg = *exponents.iter().max().unwrap_or(&1) as usize;
    let mut frontier: Vec<PolyVectorField> = basis.clone();
    for _ in 0..max_deg {
        let mut next = Vec::new();
        for g in gens {
            for f in &frontier {
                let b = g.commutator(f)?;
                if !b.is_zero() && ech.insert(&b.to_sparse()) {
                    basis.push(b.clone());
                    next.push(b);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(basis)
}

/// Build the group from the algebra: BCH law and the left-invariant field
/// of every basis element, in exponential coordinates.
pub fn build_group(alg: &LieAlgebra) -> Result<(GroupLaw, Vec<PolyVectorField>)> {
    let law = GroupLaw::from_algebra(alg)?;
    if !law.check_dilation_automorphism() {
        return Err(Error::Lifting("dilations are not automorphisms of the BCH law".into()));
    }
    let n = alg.dim();
    let fields = (0..n)
        .map(|i| {
            let mut v = vec![Rational::zero(); n];
            v[i] = Rational::one();
            law.left_invariant_field(&v)
        })
        .collect::<Result<_>>()?;
    Ok((law, fields))
}

/// Linear part of a polynomial map as a dense matrix.
fn linear_part(polys: &[Polynomial], nvars: usize) -> Matrix {
    polys
        .iter()
        .map(|p| (0..nvars).map(|j| p.coeff(&Monomial::var(nvars, j))).collect())
        .collect()
}

/// Invert a graded polynomial map `z = A w + h(w)` whose nonlinear part in
/// each degree only involves variables of lower degree.
fn invert_graded(map: &[Polynomial], exponents: &[u32]) -> Result<Vec<Polynomial>> {
    let nn = map.len();
    let a = linear_part(map, nn);
    let a_inv = inverse(&a).ok_or_else(|| Error::Lifting("linear part of the coordinate change is singular".into()))?;
    let lin: Vec<Polynomial> = a
        .iter()
        .map(|row| {
            let mut p = Polynomial::zero(nn);
            for (j, c) in row.iter().enumerate() {
                p.add_term(Monomial::var(nn, j), c.clone());
            }
            p
        })
        .collect();
    let h: Vec<Polynomial> = map.iter().zip(&lin).map(|(m, l)| m - l).collect();
    let z = vars(nn, 0, nn);
    let apply_a_inv = |v: &[Polynomial]| -> Vec<Polynomial> {
        a_inv
            .iter()
            .map(|row| {
                let mut acc = Polynomial::zero(nn);
                for (c, p) in row.iter().zip(v) {
                    acc.add_scaled(p, c);
                }
                acc
            })
            .collect()
    };
    let mut w = apply_a_inv(&z);
    let mut distinct: Vec<u32> = exponents.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    for _ in 0..=distinct.len() {
        let hw = compose_all(&h, &w)?;
        let rhs: Vec<Polynomial> = z.iter().zip(&hw).map(|(a, b)| a - b).collect();
        let next = apply_a_inv(&rhs);
        if next == w {
            break;
        }
        w = next;
    }
    if compose_all(map, &w)? != z {
        return Err(Error::Lifting("graded inversion of the coordinate change did not converge".into()));
    }
    Ok(w)
}

/// Build the lifted system for certified fields satisfying the rank
/// condition at the origin.
pub fn build_lifting(system: &HomogeneousSystem) -> Result<LiftedSystem> {
    let alg = generate_lie_algebra(system)?;
    build_lifting_from(system, alg)
}

pub fn build_lifting_from(system: &HomogeneousSystem, alg: LieAlgebra) -> Result<LiftedSystem> {
    let n = system.dim();
    let sigma = system.dilation().sigma().to_vec();
    let nn = alg.dim();
    let origin = vec![Rational::zero(); n];
    let r = hormander_rank(alg.basis(), &origin)?;
    if r < n {
        return Err(Error::RankDeficient {
            rank: r,
            n,
            point: "origin".into(),
        });
    }
    if nn < n {
        return Err(Error::Lifting("algebra dimension below ambient dimension".into()));
    }
    let (exp_law, _) = build_group(&alg)?;

    // evaluation map F(w) = exp(Σ w_k W_k)(0)
    let total = n + nn;
    let mut coeffs = vec![Polynomial::zero(total); n];
    for (k, wk) in alg.basis().iter().enumerate() {
        let wvar = Polynomial::var(total, n + k);
        for (i, c) in wk.coeffs().iter().enumerate() {
            if !c.is_zero() {
                coeffs[i] = &coeffs[i] + &(&c.extend(total) * &wvar);
            }
        }
    }
    let series = lie_series_map(&coeffs, n, 4 * (*sigma.iter().max().unwrap_or(&1) as usize) + 8)?;
    let mut at_origin: Vec<Polynomial> = vec![Polynomial::zero(nn); n];
    at_origin.extend(vars(nn, 0, nn));
    let flow_map = compose_all(&series, &at_origin)?;
    for (i, f) in flow_map.iter().enumerate() {
        if !f.is_graded_homogeneous(alg.degrees(), sigma[i]) {
            return Err(Error::Lifting(format!("evaluation map component {} is not homogeneous", i + 1)));
        }
    }

    // complementary coordinates, degree by degree
    let lin = linear_part(&flow_map, nn);
    let mut complement = Vec::new();
    let mut degrees: Vec<u32> = alg.degrees().to_vec();
    degrees.dedup();
    for &d in &degrees {
        let slots: Vec<usize> = (0..nn).filter(|&k| alg.degrees()[k] == d).collect();
        let mut ech: Echelon<usize> = Echelon::new();
        for (i, row) in lin.iter().enumerate() {
            if sigma[i] != d {
                continue;
            }
            let v: SparseVec<usize> = slots
                .iter()
                .filter(|k| !row[**k].is_zero())
                .map(|k| (*k, row[*k].clone()))
                .collect();
            if !ech.insert(&v) {
                return Err(Error::Lifting(format!(
                    "linear part of the evaluation map is degenerate in degree {d}"
                )));
            }
        }
        for &k in &slots {
            let unit: SparseVec<usize> = [(k, Rational::one())].into_iter().collect();
            if ech.insert(&unit) {
                complement.push(k);
            }
        }
        if ech.rank() != slots.len() {
            return Err(Error::Lifting(format!(
                "no complementary selection completes degree {d}; search exhausted"
            )));
        }
    }
    let p = complement.len();
    if p != nn - n {
        return Err(Error::Lifting(format!("complement has {p} elements, expected {}", nn - n)));
    }
    let tau: Vec<u32> = complement.iter().map(|&k| alg.degrees()[k]).collect();
    let mut theta: Vec<Polynomial> = flow_map.clone();
    theta.extend(complement.iter().map(|&k| Polynomial::var(nn, k)));
    let det = poly_det(&jacobian(&theta, 0, nn)?, nn);
    if !det.is_constant() || det.is_zero() {
        return Err(Error::Lifting(format!(
            "Jacobian determinant of the coordinate change is {det}, not a nonzero constant"
        )));
    }
    let theta_inv = invert_graded(&theta, alg.degrees())?;
    let exps: Vec<u32> = sigma.iter().chain(&tau).cloned().collect();

    let mut lifted_sys = assemble(system, &alg, &exp_law, &theta, &theta_inv, &exps)?;
    // make every residual nonzero through graded shears ξ_c += h_c(x)
    let mut shears: Vec<Polynomial> = vec![Polynomial::zero(n); p];
    let base: Vec<PolyVectorField> = system.fields().to_vec();
    let residual_components = |lifted: &[PolyVectorField], shears: &[Polynomial]| -> Result<Vec<Vec<Polynomial>>> {
        lifted
            .iter()
            .zip(&base)
            .map(|(l, b)| {
                (0..p)
                    .map(|c| {
                        let extra = b.apply(&shears[c])?.extend(nn);
                        Ok(l.coeff(n + c) + &extra)
                    })
                    .collect()
            })
            .collect()
    };
    let zero_count = |res: &[Vec<Polynomial>]| res.iter().filter(|r| r.iter().all(|c| c.is_zero())).count();
    let mut current = residual_components(&lifted_sys, &shears)?;
    while zero_count(&current) > 0 {
        let before = zero_count(&current);
        let mut improved = false;
        'search: for c in 0..p {
            for m in monomials_of_degree(&sigma, tau[c]) {
                if m.degree() == 0 {
                    continue;
                }
                let mut trial = shears.clone();
                trial[c].add_term(m, Rational::one());
                let res = residual_components(&lifted_sys, &trial)?;
                if zero_count(&res) < before {
                    shears = trial;
                    current = res;
                    improved = true;
                    break 'search;
                }
            }
        }
        if !improved {
            return Err(Error::Lifting(
                "some residual field vanishes and no graded shear repairs it".into(),
            ));
        }
    }
    let mut final_theta = theta.clone();
    let mut final_theta_inv = theta_inv.clone();
    if shears.iter().any(|s| !s.is_zero()) {
        // Θ' = S ∘ Θ with S(x, ξ) = (x, ξ + h(x)); Θ'^{-1} = Θ^{-1} ∘ S^{-1}
        let xs_of_w: Vec<Polynomial> = theta[..n].to_vec();
        for c in 0..p {
            let h_w = shears[c].compose(&xs_of_w)?;
            final_theta[n + c] = &theta[n + c] + &h_w;
        }
        let z = vars(nn, 0, nn);
        let mut s_inv = z.clone();
        for c in 0..p {
            let h_z = shears[c].extend(nn);
            s_inv[n + c] = &z[n + c] - &h_z;
        }
        final_theta_inv = compose_all(&theta_inv, &s_inv)?;
        lifted_sys = assemble(system, &alg, &exp_law, &final_theta, &final_theta_inv, &exps)?;
    }
    for (i, f) in lifted_sys.iter().enumerate() {
        let r = f.add(&base[i].extend(nn).scale(&-Rational::one()))?;
        if (0..n).any(|j| !r.coeff(j).is_zero()) {
            return Err(Error::Lifting(format!("lift residual R{} acts in x", i + 1)));
        }
        if r.is_zero() {
            return Err(Error::Lifting(format!("lift residual R{} vanishes", i + 1)));
        }
    }
    let law = exp_law.transform(&final_theta, &final_theta_inv, exps.clone())?;
    let theta_compiled = final_theta.iter().map(|p| p.compile()).collect();
    let theta_inv_compiled = final_theta_inv.iter().map(|p| p.compile()).collect();
    Ok(LiftedSystem {
        n,
        p,
        sigma,
        tau,
        base_fields: base,
        degrees: system.degrees().to_vec(),
        names: system.names().to_vec(),
        algebra: alg,
        exp_law,
        flow_map,
        law,
        lifted: lifted_sys,
        theta: final_theta,
        theta_inv: final_theta_inv,
        theta_compiled,
        theta_inv_compiled,
        complement,
        shears,
    })
}

/// Push the left-invariant generator fields through `Θ`:
/// `X̃(z) = JΘ(Θ⁻¹ z) · Z(Θ⁻¹ z)`.
fn assemble(
    system: &HomogeneousSystem,
    alg: &LieAlgebra,
    exp_law: &GroupLaw,
    theta: &[Polynomial],
    theta_inv: &[Polynomial],
    exps: &[u32],
) -> Result<Vec<PolyVectorField>> {
    let nn = alg.dim();
    let jt = jacobian(theta, 0, nn)?;
    let mut out = Vec::new();
    for (i, &g) in alg.generator_indices().iter().enumerate() {
        let mut v = vec![Rational::zero(); nn];
        v[g] = Rational::one();
        let z = exp_law.left_invariant_field(&v)?;
        let mut coeffs = Vec::with_capacity(nn);
        for row in &jt {
            let mut acc = Polynomial::zero(nn);
            for (jrc, zc) in row.iter().zip(z.coeffs()) {
                if !jrc.is_zero() && !zc.is_zero() {
                    acc = &acc + &(jrc * zc);
                }
            }
            coeffs.push(acc.compose(theta_inv)?);
        }
        let f = PolyVectorField::new(coeffs)?;
        if certify_with_exponents(&f, exps) != Some(system.degrees()[i]) {
            return Err(Error::Lifting(format!("lifted field {} is not homogeneous", i + 1)));
        }
        out.push(f);
    }
    Ok(out)
}

/// Change-of-variable maps on the fibre `R^p`, symbolic in `(x, y)`.
/// Ring layout: `x_1..x_n, y_1..y_n, ξ_1..ξ_p`.
#[derive(Clone, Debug)]
pub struct SliceMaps {
    pub n: usize,
    pub p: usize,
    /// `Ψ_{x,y}(ξ) = π_p((y,0)⁻¹ ⋆ (x,ξ))`
    pub psi: Vec<Polynomial>,
    /// `Ψ_{x,y}^{-1}(ζ)`
    pub psi_inv: Vec<Polynomial>,
    /// `Φ_{x,y}(ζ) = π_p((y,0) ⋆ (y,ζ)⁻¹ ⋆ (x,0))`
    pub phi: Vec<Polynomial>,
    pub det_psi: Polynomial,
    pub det_phi: Polynomial,
    /// `(y,0)⁻¹ ⋆ (x, Ψ⁻¹(ζ))`, whose last `p` components equal `ζ`.
    pub integrand_arg: Vec<Polynomial>,
    /// `(x,0)⁻¹ ⋆ (y, Ψ_{y,x}⁻¹(ζ))` with the roles of `x` and `y` swapped.
    pub integrand_arg_swapped: Vec<Polynomial>,
}

pub fn slice_diffeos(lifted: &LiftedSystem) -> Result<SliceMaps> {
    let n = lifted.n();
    let p = lifted.p();
    let nn = n + p;
    let total = 2 * n + p;
    let x = vars(total, 0, n);
    let y = vars(total, n, n);
    let xi = vars(total, 2 * n, p);
    let zeros = vec![Polynomial::zero(total); p];
    let law = lifted.law();
    let point = |a: &[Polynomial], b: &[Polynomial]| -> Vec<Polynomial> { a.iter().chain(b).cloned().collect() };

    let y0_inv = law.invert_poly(&point(&y, &zeros))?;
    let v = law.multiply_poly(&y0_inv, &point(&x, &xi))?;
    let psi: Vec<Polynomial> = v[n..].to_vec();

    let y0 = point(&y, &zeros);
    let yz_inv = law.invert_poly(&point(&y, &xi))?;
    let x0 = point(&x, &zeros);
    let w = law.multiply_poly(&law.multiply_poly(&y0, &yz_inv)?, &x0)?;
    let phi: Vec<Polynomial> = w[n..].to_vec();

    let det_psi = poly_det(&jacobian(&psi, 2 * n, p)?, total);
    let det_phi = poly_det(&jacobian(&phi, 2 * n, p)?, total);

    // Ψ is unit triangular by degree: ξ = ζ − (Ψ(ξ) − ξ), iterated
    let zeta = xi.clone();
    let nonlinear: Vec<Polynomial> = psi.iter().zip(&xi).map(|(a, b)| a - b).collect();
    let mut inv = zeta.clone();
    let mut distinct = lifted.tau().to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    for _ in 0..=distinct.len() + 1 {
        let mut subs: Vec<Polynomial> = x.iter().chain(&y).cloned().collect();
        subs.extend(inv.iter().cloned());
        let nl = compose_all(&nonlinear, &subs)?;
        let next: Vec<Polynomial> = zeta.iter().zip(&nl).map(|(a, b)| a - b).collect();
        if next == inv {
            break;
        }
        inv = next;
    }
    let mut subs: Vec<Polynomial> = x.iter().chain(&y).cloned().collect();
    subs.extend(inv.iter().cloned());
    if compose_all(&psi, &subs)? != zeta {
        return Err(Error::Lifting("fibre map is not unit triangular".into()));
    }
    let integrand_arg = compose_all(&v, &subs)?;
    // swap x and y
    let swap: Vec<usize> = (0..total)
        .map(|i| if i < n { i + n } else if i < 2 * n { i - n } else { i })
        .collect();
    let integrand_arg_swapped = integrand_arg.iter().map(|q| q.remap(total, &swap)).collect();
    let _ = nn;
    Ok(SliceMaps {
        n,
        p,
        psi,
        psi_inv: inv,
        phi,
        det_psi,
        det_phi,
        integrand_arg,
        integrand_arg_swapped,
    })
}

impl SliceMaps {
    /// Determinants are ±1 and `(y,0)⁻¹⋆(x,Φ(ζ)) = (y,ζ)⁻¹⋆(x,0)`.
    pub fn check(&self, lifted: &LiftedSystem) -> Result<Vec<StructuralCheck>> {
        let n = self.n;
        let p = self.p;
        let total = 2 * n + p;
        let unit = |d: &Polynomial| {
            d == &Polynomial::one(total) || d == &Polynomial::constant(total, -Rational::one())
        };
        let law = lifted.law();
        let x = vars(total, 0, n);
        let y = vars(total, n, n);
        let zeta = vars(total, 2 * n, p);
        let zeros = vec![Polynomial::zero(total); p];
        let point = |a: &[Polynomial], b: &[Polynomial]| -> Vec<Polynomial> { a.iter().chain(b).cloned().collect() };
        let lhs = law.multiply_poly(&law.invert_poly(&point(&y, &zeros))?, &point(&x, &self.phi))?;
        let rhs = law.multiply_poly(&law.invert_poly(&point(&y, &zeta))?, &point(&x, &zeros))?;
        Ok(vec![
            StructuralCheck::new("slice_jacobian_psi", unit(&self.det_psi), format!("det = {}", self.det_psi)),
            StructuralCheck::new("slice_jacobian_phi", unit(&self.det_phi), format!("det = {}", self.det_phi)),
            StructuralCheck::new("phi_identity", lhs == rhs, "(y,0)^-1*(x,Phi(zeta)) = (y,zeta)^-1*(x,0)"),
        ])
    }

    /// `Ψ` at fixed numeric `(x, y)` is the identity when `x = y = 0`.
    pub fn psi_at(&self, x: &[Rational], y: &[Rational]) -> Result<Vec<Polynomial>> {
        let total = 2 * self.n + self.p;
        let mut subs: Vec<Polynomial> = x
            .iter()
            .chain(y)
            .map(|c| Polynomial::constant(self.p, c.clone()))
            .collect();
        subs.extend(vars(self.p, 0, self.p));
        let _ = total;
        compose_all(&self.psi, &subs)
    }
}

/// One row of the saturability table.
#[derive(Clone, Debug, Serialize)]
pub struct SaturableTerm {
    /// Derivative orders in `x`.
    pub alpha: Vec<u32>,
    /// Derivative orders in `ξ`.
    pub beta: Vec<u32>,
    pub coefficient: String,
    /// Largest `E`-weighted degree of a `ξ`-monomial in the coefficient.
    pub xi_degree: u32,
    /// `H_E(β) − 1`.
    pub bound: i64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SaturableReport {
    pub terms: Vec<SaturableTerm>,
    /// Every summand differentiates in `ξ`.
    pub acts_in_xi: bool,
    /// Every coefficient respects the `ξ`-degree bound.
    pub degree_bound: bool,
}

impl SaturableReport {
    pub fn passed(&self) -> bool {
        self.acts_in_xi && self.degree_bound
    }
}

/// Expand `R* = (L̃)* − L*` and check that every summand differentiates in
/// `ξ` with coefficients of bounded `ξ`-degree.
pub fn saturable_check(op: &OperatorSpec, lifted: &LiftedSystem) -> Result<SaturableReport> {
    let n = lifted.n();
    let nn = lifted.big_n();
    let tau = lifted.tau();
    let lt = operator_transpose(op, lifted.lifted_fields(), lifted.degrees())?;
    let bt = operator_transpose(op, lifted.base_fields(), lifted.degrees())?;
    let ext: Vec<PolyVectorField> = lifted.base_fields().iter().map(|f| f.extend(nn)).collect();
    let r = DiffOperator::from_operator(lifted.lifted_fields(), &lt).sub(&DiffOperator::from_operator(&ext, &bt));
    let names = |i: usize| {
        if i < n {
            format!("x{}", i + 1)
        } else {
            format!("xi{}", i - n + 1)
        }
    };
    let mut terms = Vec::new();
    let mut acts = true;
    let mut bound_ok = true;
    for (a, coeff) in r.terms() {
        let alpha = a.0[..n].to_vec();
        let beta = a.0[n..].to_vec();
        let h: i64 = beta.iter().zip(tau).map(|(b, t)| (*b * *t) as i64).sum();
        let mut xi_deg = 0;
        for (m, _) in coeff.terms() {
            let d: u32 = m.0[n..].iter().zip(tau).map(|(e, t)| e * t).sum();
            xi_deg = xi_deg.max(d);
        }
        let has_beta = beta.iter().any(|b| *b > 0);
        let ok = has_beta && (xi_deg as i64) <= h - 1;
        acts &= has_beta;
        bound_ok &= (xi_deg as i64) <= h - 1;
        terms.push(SaturableTerm {
            alpha,
            beta,
            coefficient: coeff.render_with(&names),
            xi_degree: xi_deg,
            bound: h - 1,
            ok,
        });
    }
    Ok(SaturableReport {
        terms,
        acts_in_xi: acts,
        degree_bound: bound_ok,
    })
}

/// Grouped view of a lifted system for reports.
#[derive(Clone, Debug, Serialize)]
pub struct LiftedSummary {
    pub n: usize,
    pub p: usize,
    pub big_n: usize,
    pub q: u32,
    pub e: u32,
    pub big_q: u32,
    pub sigma: Vec<u32>,
    pub tau: Vec<u32>,
    pub degrees: Vec<u32>,
    pub algebra_degrees: Vec<u32>,
    pub complement: Vec<usize>,
    pub lifted_fields: BTreeMap<String, String>,
    pub residuals: BTreeMap<String, String>,
    pub group_law: Vec<String>,
    pub group_inverse: Vec<String>,
    pub theta: Vec<String>,
    pub theta_inverse: Vec<String>,
    pub shears: Vec<String>,
}

impl LiftedSystem {
    pub fn summary(&self) -> LiftedSummary {
        let n = self.n;
        let nn = self.big_n();
        let zname = |i: usize| {
            if i < n {
                format!("x{}", i + 1)
            } else {
                format!("xi{}", i - n + 1)
            }
        };
        let law_name = |i: usize| {
            if i < nn {
                format!("a{}", i + 1)
            } else {
                format!("b{}", i - nn + 1)
            }
        };
        let wname = |i: usize| format!("w{}", i + 1);
        let field_str = |f: &PolyVectorField| {
            let mut parts = Vec::new();
            for (i, c) in f.coeffs().iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                parts.push(format!("({})*D{}", c.render_with(&zname), zname(i)));
            }
            if parts.is_empty() {
                "0".to_string()
            } else {
                parts.join(" + ")
            }
        };
        LiftedSummary {
            n,
            p: self.p,
            big_n: nn,
            q: self.q(),
            e: self.e(),
            big_q: self.big_q(),
            sigma: self.sigma.clone(),
            tau: self.tau.clone(),
            degrees: self.degrees.clone(),
            algebra_degrees: self.algebra.degrees().to_vec(),
            complement: self.complement.iter().map(|k| k + 1).collect(),
            lifted_fields: self
                .names
                .iter()
                .zip(&self.lifted)
                .map(|(name, f)| (name.clone(), field_str(f)))
                .collect(),
            residuals: self
                .names
                .iter()
                .enumerate()
                .map(|(i, name)| (name.clone(), field_str(&self.residual(i))))
                .collect(),
            group_law: self.law.mult_polys().iter().map(|p| p.render_with(&law_name)).collect(),
            group_inverse: self.law.inverse_polys().iter().map(|p| p.render_with(&zname)).collect(),
            theta: self.theta.iter().map(|p| p.render_with(&wname)).collect(),
            theta_inverse: self.theta_inv.iter().map(|p| p.render_with(&zname)).collect(),
            shears: self.shears.iter().map(|p| p.to_string()).collect(),
        }
    }
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

    #[test]
    fn flows() {
        let d1 = PolyVectorField::coordinate(2, 0);
        assert_eq!(exp_flow(&d1, &[int(0), int(0)], &int(1)).unwrap(), vec![int(1), int(0)]);
        let f = d1
            .add(&PolyVectorField::new(vec![Polynomial::zero(2), Polynomial::var(2, 0)]).unwrap())
            .unwrap();
        let end = exp_flow(&f, &[int(0), int(0)], &int(1)).unwrap();
        assert_eq!(end, vec![int(1), rat(1, 2)]);
        let back = exp_flow(&f, &end, &int(-1)).unwrap();
        assert_eq!(back, vec![int(0), int(0)]);
    }

    #[test]
    fn grushin_group_is_heisenberg() {
        let alg = generate_lie_algebra(&grushin()).unwrap();
        let (law, fields) = build_group(&alg).unwrap();
        let a = vars(6, 0, 3);
        let b = vars(6, 3, 3);
        let half = rat(1, 2);
        let expected3 = &(&a[2] + &b[2]) + &(&(&a[0] * &b[1]) - &(&a[1] * &b[0])).scale(&half);
        assert_eq!(law.mult_polys()[2], expected3);
        assert_eq!(law.mult_polys()[0], &a[0] + &b[0]);
        let origin = vec![int(0); 3];
        for (i, f) in fields.iter().enumerate() {
            let at0: Vec<Rational> = f.coeffs().iter().map(|c| c.eval(&origin).unwrap()).collect();
            let mut e = vec![int(0); 3];
            e[i] = int(1);
            assert_eq!(at0, e);
        }
        assert!(law.check_associativity().unwrap());
        assert!(law.check_left_translation_jacobian().unwrap());
    }

    #[test]
    fn grushin_lifting_dimensions() {
        let lifted = build_lifting(&grushin()).unwrap();
        assert_eq!(lifted.big_n(), 3);
        assert_eq!(lifted.p(), 1);
        assert_eq!(lifted.tau(), &[1]);
        assert_eq!(lifted.e(), 1);
        assert_eq!(lifted.big_q(), 4);
        for c in lifted.structural_checks(7).unwrap() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn norm_examples() {
        let nrm = HomNorm::new(vec![1, 2]);
        assert_eq!(nrm.eval(&[3.0, 4.0]), 5.0);
        assert_eq!(nrm.eval(&[0.0, 0.0]), 0.0);
    }
}
