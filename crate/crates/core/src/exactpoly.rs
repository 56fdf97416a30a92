//! Exact multivariate polynomials over the rationals.
//!
//! Coefficients are arbitrary precision rationals, so every algebraic
//! identity checked elsewhere in the crate is checked exactly. Terms live in
//! a `BTreeMap` keyed by [`Monomial`], which keeps iteration and text output
//! deterministic.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type Rational = BigRational;

/// `p/q` as a [`Rational`].
pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn int(p: i64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

/// Exact conversion of a finite `f64`.
pub fn rational_from_f64(v: f64) -> Result<Rational> {
    Rational::from_float(v).ok_or_else(|| Error::InvalidArgument(format!("non-finite value {v}")))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parse `p`, `-p` or `p/q`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::InvalidArgument(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(p, q))
        }
        None => Ok(Rational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Exponent vector. Ordered graded-lexicographically: total degree first,
/// then exponents compared left to right.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Monomial(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `Σ σ_i α_i`.
    pub fn weighted_degree(&self, sigma: &[u32]) -> u32 {
        self.0.iter().zip(sigma).map(|(a, s)| a * s).sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

/// Polynomial in `nvars` variables `x1..xn` with no stored zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = Polynomial::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(nvars), c);
        }
        p
    }

    pub fn one(nvars: usize) -> Self {
        Polynomial::constant(nvars, Rational::one())
    }

    /// The coordinate function `x_{i+1}` (zero based index `i`).
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut p = Polynomial::zero(nvars);
        p.terms.insert(Monomial::var(nvars, i), Rational::one());
        p
    }

    pub fn monomial(exponents: Vec<u32>, c: Rational) -> Self {
        let nvars = exponents.len();
        let mut p = Polynomial::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(Monomial(exponents), c);
        }
        p
    }

    /// Build from `(exponents, coefficient)` pairs, merging repeats.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<u32>, Rational)>) -> Result<Self> {
        let mut p = Polynomial::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::DimensionMismatch {
                    expected: nvars,
                    got: e.len(),
                });
            }
            p.add_term(Monomial(e), c);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in increasing graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> Rational {
        self.coeff(&Monomial::one(self.nvars))
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.degree() == 0)
    }

    /// Total (unweighted) degree; `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).max()
    }

    pub fn max_exponent(&self, i: usize) -> u32 {
        self.terms.keys().map(|m| m.0[i]).max().unwrap_or(0)
    }

    pub fn depends_on(&self, i: usize) -> bool {
        self.terms.keys().any(|m| m.0[i] > 0)
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check_same(&self, other: &Polynomial) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                got: other.nvars,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_same(other)?;
        let mut out = Polynomial::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    /// In-place `self += c * other`.
    pub fn add_scaled(&mut self, other: &Polynomial, c: &Rational) {
        debug_assert_eq!(self.nvars, other.nvars);
        if c.is_zero() {
            return;
        }
        for (m, k) in &other.terms {
            self.add_term(m.clone(), k * c);
        }
    }

    pub fn scale(&self, c: &Rational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.nvars);
        }
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut acc = Polynomial::one(self.nvars);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Partial derivative in `x_{i+1}`.
    pub fn diff(&self, i: usize) -> Result<Polynomial> {
        if i >= self.nvars {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.nvars,
            });
        }
        let mut out = Polynomial::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut m2 = m.clone();
            m2.0[i] -= 1;
            out.add_term(m2, c * Rational::from_integer(BigInt::from(e)));
        }
        Ok(out)
    }

    /// Exact evaluation at a rational point.
    pub fn eval(&self, point: &[Rational]) -> Result<Rational> {
        if point.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                got: point.len(),
            });
        }
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (x, e) in point.iter().zip(&m.0) {
                if *e > 0 {
                    t *= num_traits::pow(x.clone(), *e as usize);
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    pub fn eval_f64(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                got: point.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .map(|(m, c)| {
                m.0.iter()
                    .zip(point)
                    .fold(to_f64(c), |acc, (e, x)| acc * x.powi(*e as i32))
            })
            .sum())
    }

    /// Split into `σ`-graded components: `deg ↦ Σ_{Σσ_iα_i = deg} c_α x^α`.
    pub fn graded_components(&self, sigma: &[u32]) -> Result<BTreeMap<u32, Polynomial>> {
        if sigma.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                got: sigma.len(),
            });
        }
        let mut out: BTreeMap<u32, Polynomial> = BTreeMap::new();
        for (m, c) in &self.terms {
            out.entry(m.weighted_degree(sigma))
                .or_insert_with(|| Polynomial::zero(self.nvars))
                .terms
                .insert(m.clone(), c.clone());
        }
        Ok(out)
    }

    /// The zero polynomial is homogeneous of every degree.
    pub fn is_graded_homogeneous(&self, sigma: &[u32], degree: u32) -> bool {
        self.terms
            .keys()
            .all(|m| m.weighted_degree(sigma) == degree)
    }

    /// The unique weighted degree if the polynomial is nonzero and homogeneous.
    pub fn homogeneous_degree(&self, sigma: &[u32]) -> Option<u32> {
        let mut it = self.terms.keys().map(|m| m.weighted_degree(sigma));
        let d = it.next()?;
        it.all(|e| e == d).then_some(d)
    }

    /// Largest weighted degree among the terms.
    pub fn max_weighted_degree(&self, sigma: &[u32]) -> Option<u32> {
        self.terms.keys().map(|m| m.weighted_degree(sigma)).max()
    }

    /// Substitute `x_i ↦ subs[i]`; all substitutes share one ring.
    pub fn compose(&self, subs: &[Polynomial]) -> Result<Polynomial> {
        if subs.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                got: subs.len(),
            });
        }
        let target = subs.first().map(|p| p.nvars).unwrap_or(0);
        if subs.iter().any(|p| p.nvars != target) {
            return Err(Error::InvalidArgument("substitutes live in different rings".into()));
        }
        let mut cache: Vec<Vec<Polynomial>> = subs.iter().map(|p| vec![Polynomial::one(p.nvars), p.clone()]).collect();
        let mut out = Polynomial::zero(target);
        for (m, c) in &self.terms {
            let mut t = Polynomial::constant(target, c.clone());
            for (i, e) in m.0.iter().enumerate() {
                let e = *e as usize;
                if e == 0 {
                    continue;
                }
                while cache[i].len() <= e {
                    let next = &cache[i][cache[i].len() - 1] * &subs[i];
                    cache[i].push(next);
                }
                t = &t * &cache[i][e];
            }
            out = &out + &t;
        }
        Ok(out)
    }

    /// Move into a ring with `nvars` variables, sending `x_i ↦ x_{map[i]}`.
    pub fn remap(&self, nvars: usize, map: &[usize]) -> Polynomial {
        assert_eq!(map.len(), self.nvars);
        let mut out = Polynomial::zero(nvars);
        for (m, c) in &self.terms {
            let mut e = vec![0; nvars];
            for (i, k) in m.0.iter().enumerate() {
                e[map[i]] += k;
            }
            out.add_term(Monomial(e), c.clone());
        }
        out
    }

    /// Embed into the first `self.nvars` variables of a larger ring.
    pub fn extend(&self, nvars: usize) -> Polynomial {
        let map: Vec<usize> = (0..self.nvars).collect();
        self.remap(nvars, &map)
    }

    /// Map every coefficient through `f`, dropping zeros.
    pub fn map_coeffs(&self, f: impl Fn(&Monomial, &Rational) -> Rational) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(m, c));
        }
        out
    }

    /// `p(δ_λ x) = Σ λ^{wdeg} c_α x^α` for a rational `λ`.
    pub fn dilate(&self, sigma: &[u32], lambda: &Rational) -> Polynomial {
        self.map_coeffs(|m, c| c * num_traits::pow(lambda.clone(), m.weighted_degree(sigma) as usize))
    }

    /// Sum of absolute values of the coefficients.
    pub fn l1_norm(&self) -> Rational {
        self.terms.values().map(|c| c.abs()).sum()
    }

    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly::new(self)
    }

    /// Render with variables named `{prefix}1, {prefix}2, …`.
    pub fn render_with(&self, names: &dyn Fn(usize) -> String) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mut factors = Vec::new();
            for (i, e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(names(i)),
                    _ => factors.push(format!("{}^{}", names(i), e)),
                }
            }
            if factors.is_empty() {
                out.push_str(&format_rational(&a));
            } else {
                if !a.is_one() {
                    out.push_str(&format_rational(&a));
                    out.push('*');
                }
                out.push_str(&factors.join("*"));
            }
        }
        out
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_with(&|i| format!("x{}", i + 1)))
    }
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, o: &Polynomial) -> Polynomial {
        self.try_add(o).expect("polynomial rings differ")
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, o: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        assert_eq!(self.nvars, o.nvars, "polynomial rings differ");
        out.add_scaled(o, &-Rational::one());
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, o: &Polynomial) -> Polynomial {
        self.try_mul(o).expect("polynomial rings differ")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(&-Rational::one())
    }
}

impl Add for Polynomial {
    type Output = Polynomial;
    fn add(self, o: Polynomial) -> Polynomial {
        &self + &o
    }
}

impl Sub for Polynomial {
    type Output = Polynomial;
    fn sub(self, o: Polynomial) -> Polynomial {
        &self - &o
    }
}

impl Mul for Polynomial {
    type Output = Polynomial;
    fn mul(self, o: Polynomial) -> Polynomial {
        &self * &o
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}

/// Polynomial compiled for repeated floating point evaluation over any
/// [`Scalar`].
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    nvars: usize,
    max_exp: Vec<u32>,
    terms: Vec<(f64, Vec<(usize, u32)>)>,
}

impl CompiledPoly {
    fn new(p: &Polynomial) -> Self {
        let mut max_exp = vec![0; p.nvars];
        let terms = p
            .terms
            .iter()
            .map(|(m, c)| {
                let f: Vec<(usize, u32)> = m
                    .0
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| **e > 0)
                    .map(|(i, e)| {
                        max_exp[i] = max_exp[i].max(*e);
                        (i, *e)
                    })
                    .collect();
                (to_f64(c), f)
            })
            .collect();
        CompiledPoly {
            nvars: p.nvars,
            max_exp,
            terms,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (c, f) in &self.terms {
            let mut t = *c;
            for (i, e) in f {
                t *= x[*i].powi(*e as i32);
            }
            acc += t;
        }
        acc
    }

    pub fn eval_scalar<S: Scalar>(&self, x: &[S]) -> S {
        let powers: Vec<Vec<S>> = x
            .iter()
            .zip(&self.max_exp)
            .map(|(v, m)| {
                let mut p = Vec::with_capacity(*m as usize + 1);
                p.push(S::from_f64(1.0));
                for k in 1..=*m as usize {
                    let next = p[k - 1].clone() * v.clone();
                    p.push(next);
                }
                p
            })
            .collect();
        let mut acc = S::from_f64(0.0);
        for (c, f) in &self.terms {
            let mut t: Option<S> = None;
            for (i, e) in f {
                let pw = powers[*i][*e as usize].clone();
                t = Some(match t {
                    None => pw,
                    Some(t) => t * pw,
                });
            }
            acc = acc
                + match t {
                    None => S::from_f64(*c),
                    Some(t) => t.scale(*c),
                };
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, i: usize) -> Polynomial {
        Polynomial::var(n, i)
    }

    #[test]
    fn product_of_scaled_variables() {
        let a = x(2, 0).scale(&rat(1, 2));
        let b = x(2, 1).scale(&rat(1, 3));
        let p = &a * &b;
        assert_eq!(p, Polynomial::monomial(vec![1, 1], rat(1, 6)));
    }

    #[test]
    fn derivative_example() {
        let p = &x(2, 0).pow(2) + &(&x(2, 0) * &x(2, 1)).scale(&int(3));
        let d = p.diff(0).unwrap();
        assert_eq!(d, &x(2, 0).scale(&int(2)) + &x(2, 1).scale(&int(3)));
        assert!(p.diff(2).is_err());
    }

    #[test]
    fn exact_evaluation() {
        let p = Polynomial::monomial(vec![1, 1], rat(1, 2));
        assert_eq!(p.eval(&[rat(1, 3), int(3)]).unwrap(), rat(1, 2));
        assert!(p.eval(&[int(1)]).is_err());
    }

    #[test]
    fn graded_split() {
        let p = &x(2, 0) + &x(2, 1);
        let c = p.graded_components(&[1, 2]).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[&1], x(2, 0));
        assert_eq!(c[&2], x(2, 1));
        assert!(Polynomial::zero(2).is_graded_homogeneous(&[1, 2], 7));
        assert!(!p.is_graded_homogeneous(&[1, 2], 1));
    }

    #[test]
    fn rendering_is_canonical() {
        let p = Polynomial::from_terms(
            2,
            vec![(vec![0, 0], rat(1, 6)), (vec![2, 1], rat(3, 2)), (vec![0, 1], int(-1))],
        )
        .unwrap();
        assert_eq!(p.to_string(), "3/2*x1^2*x2 - x2 + 1/6");
        assert_eq!(Polynomial::zero(3).to_string(), "0");
    }

    #[test]
    fn compose_substitutes() {
        // (x1 + x2)^2 with x1 -> y1*y2, x2 -> 1
        let p = (&x(2, 0) + &x(2, 1)).pow(2);
        let q = p.compose(&[&x(2, 0) * &x(2, 1), Polynomial::one(2)]).unwrap();
        let expect = &(&(&x(2, 0) * &x(2, 1)).pow(2) + &(&x(2, 0) * &x(2, 1)).scale(&int(2))) + &Polynomial::one(2);
        assert_eq!(q, expect);
    }

    #[test]
    fn compiled_matches_exact() {
        let p = Polynomial::from_terms(3, vec![(vec![2, 0, 1], rat(-3, 4)), (vec![0, 3, 0], int(2)), (vec![0, 0, 0], int(5))]).unwrap();
        let pt = [0.5, -1.25, 2.0];
        let exact = p
            .eval(&pt.iter().map(|v| rational_from_f64(*v).unwrap()).collect::<Vec<_>>())
            .unwrap();
        assert!((p.compile().eval(&pt) - to_f64(&exact)).abs() < 1e-14);
        assert!((p.compile().eval_scalar(&pt) - to_f64(&exact)).abs() < 1e-14);
    }
}
