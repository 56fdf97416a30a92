//! Polynomial vector fields, dilations, and operators built from them.
//!
//! A field `X = Σ c_i(x) ∂_i` is stored by its coefficient polynomials. An
//! operator `L = Σ c_I X_I` is stored abstractly as a list of words over a
//! field system ([`OperatorSpec`]); [`DiffOperator`] is its expansion
//! `Σ a_α(x) D^α` in coordinate derivatives.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactpoly::{format_rational, int, Monomial, Polynomial, Rational};

/// Anisotropic dilations `δ_λ(x) = (λ^{σ_1} x_1, …, λ^{σ_n} x_n)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DilationFamily {
    sigma: Vec<u32>,
}

impl DilationFamily {
    /// Exponents `1 = σ_1 ≤ σ_2 ≤ … ≤ σ_n`.
    pub fn new(sigma: Vec<u32>) -> Result<Self> {
        let bad = |reason: &str| Error::InvalidDilation {
            exponents: sigma.clone(),
            reason: reason.into(),
        };
        if sigma.is_empty() {
            return Err(bad("at least one variable is required"));
        }
        if sigma[0] != 1 {
            return Err(bad("the first exponent must be 1"));
        }
        if sigma.windows(2).any(|w| w[0] > w[1]) {
            return Err(bad("exponents must be non-decreasing"));
        }
        Ok(DilationFamily { sigma })
    }

    /// Any positive exponents, in any order. Used for lifted and
    /// heat-extended spaces where the appended variables break the ordering.
    pub fn general(sigma: Vec<u32>) -> Result<Self> {
        if sigma.is_empty() || sigma.contains(&0) {
            return Err(Error::InvalidDilation {
                exponents: sigma,
                reason: "exponents must be positive".into(),
            });
        }
        Ok(DilationFamily { sigma })
    }

    pub fn sigma(&self) -> &[u32] {
        &self.sigma
    }

    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    /// Homogeneous dimension `q = Σ σ_i`.
    pub fn homogeneous_dimension(&self) -> u32 {
        self.sigma.iter().sum()
    }

    pub fn is_standard(&self) -> bool {
        self.sigma[0] == 1 && self.sigma.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn apply(&self, lambda: f64, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.sigma)
            .map(|(v, s)| v * lambda.powi(*s as i32))
            .collect()
    }

    /// `Σ |x_i|^{1/σ_i}`, a δ-homogeneous gauge of degree one.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.sigma)
            .map(|(v, s)| v.abs().powf(1.0 / *s as f64))
            .sum()
    }

    /// `max |x_i|^{1/σ_i}`.
    pub fn box_gauge(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.sigma)
            .map(|(v, s)| v.abs().powf(1.0 / *s as f64))
            .fold(0.0, f64::max)
    }
}

/// First order operator `Σ c_i(x) ∂_{x_i}` with polynomial coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PolyVectorField {
    coeffs: Vec<Polynomial>,
}

impl PolyVectorField {
    pub fn new(coeffs: Vec<Polynomial>) -> Result<Self> {
        let n = coeffs.len();
        if let Some(p) = coeffs.iter().find(|p| p.nvars() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p.nvars(),
            });
        }
        Ok(PolyVectorField { coeffs })
    }

    pub fn zero(n: usize) -> Self {
        PolyVectorField {
            coeffs: vec![Polynomial::zero(n); n],
        }
    }

    /// `∂_{x_{i+1}}`.
    pub fn coordinate(n: usize, i: usize) -> Self {
        let mut f = Self::zero(n);
        f.coeffs[i] = Polynomial::one(n);
        f
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Polynomial] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> &Polynomial {
        &self.coeffs[i]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        PolyVectorField {
            coeffs: self.coeffs.iter().map(|p| p.scale(c)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(PolyVectorField {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }

    /// `X u = Σ c_i ∂_i u`.
    pub fn apply(&self, u: &Polynomial) -> Result<Polynomial> {
        if u.nvars() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.nvars(),
            });
        }
        let mut out = Polynomial::zero(self.dim());
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                out = &out + &(c * &u.diff(i)?);
            }
        }
        Ok(out)
    }

    /// `[X, Y]` with components `X(Y_i) − Y(X_i)`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let coeffs = (0..self.dim())
            .map(|i| Ok(&self.apply(&other.coeffs[i])? - &other.apply(&self.coeffs[i])?))
            .collect::<Result<Vec<_>>>()?;
        Ok(PolyVectorField { coeffs })
    }

    pub fn divergence(&self) -> Polynomial {
        let mut d = Polynomial::zero(self.dim());
        for (i, c) in self.coeffs.iter().enumerate() {
            d = &d + &c.diff(i).expect("index in range");
        }
        d
    }

    /// Move into `nvars` variables, sending `x_i ↦ x_{map[i]}` and
    /// `∂_i ↦ ∂_{map[i]}`.
    pub fn remap(&self, nvars: usize, map: &[usize]) -> Self {
        let mut coeffs = vec![Polynomial::zero(nvars); nvars];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[map[i]] = c.remap(nvars, map);
        }
        PolyVectorField { coeffs }
    }

    /// Same field viewed in a larger space with extra trailing variables.
    pub fn extend(&self, nvars: usize) -> Self {
        let map: Vec<usize> = (0..self.dim()).collect();
        self.remap(nvars, &map)
    }

    /// Sparse coordinates keyed by (component, monomial).
    pub fn to_sparse(&self) -> BTreeMap<(usize, Monomial), Rational> {
        let mut v = BTreeMap::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            for (m, k) in c.terms() {
                v.insert((i, m.clone()), k.clone());
            }
        }
        v
    }

    /// Coefficient `i` may only involve variables of strictly smaller
    /// exponent than `σ_i`.
    pub fn has_pyramid_shape(&self, sigma: &[u32]) -> bool {
        self.coeffs.iter().enumerate().all(|(i, c)| {
            (0..self.dim()).all(|j| sigma[j] < sigma[i] || !c.depends_on(j))
        })
    }

    pub fn render_with(&self, names: &dyn Fn(usize) -> String) -> String {
        let mut parts = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let d = format!("d{}", names(i).trim_start_matches('x'));
            if c == &Polynomial::one(self.dim()) {
                parts.push(d);
            } else if c.num_terms() == 1 {
                parts.push(format!("{}*{}", c.render_with(names), d));
            } else {
                parts.push(format!("({})*{}", c.render_with(names), d));
            }
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

impl fmt::Display for PolyVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_with(&|i| format!("x{}", i + 1)))
    }
}

impl Serialize for PolyVectorField {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

pub fn field_apply(x: &PolyVectorField, u: &Polynomial) -> Result<Polynomial> {
    x.apply(u)
}

pub fn commutator(x: &PolyVectorField, y: &PolyVectorField) -> Result<PolyVectorField> {
    x.commutator(y)
}

/// Homogeneity degree of a field: `ν ≥ 1` such that every coefficient
/// `c_i` is homogeneous of degree `σ_i − ν`. Also requires the pyramid
/// shape. `None` if no such `ν` exists or the field is zero.
pub fn certify_homogeneity(x: &PolyVectorField, delta: &DilationFamily) -> Option<u32> {
    certify_with_exponents(x, delta.sigma())
}

pub(crate) fn certify_with_exponents(x: &PolyVectorField, sigma: &[u32]) -> Option<u32> {
    if sigma.len() != x.dim() {
        return None;
    }
    let mut nu: Option<i64> = None;
    for (i, c) in x.coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let d = c.homogeneous_degree(sigma)? as i64;
        let this = sigma[i] as i64 - d;
        match nu {
            None => nu = Some(this),
            Some(v) if v != this => return None,
            _ => {}
        }
    }
    let nu = nu?;
    if nu < 1 || !x.has_pyramid_shape(sigma) {
        return None;
    }
    Some(nu as u32)
}

/// A word `X_{i_1} X_{i_2} … X_{i_k}` over a field system (0-based indices).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn reversed(&self) -> MultiIndex {
        MultiIndex(self.0.iter().rev().cloned().collect())
    }

    pub fn concat(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().chain(&other.0).cloned().collect())
    }
}

/// `Σ_h ν_{i_h}`.
pub fn multiindex_weight(word: &MultiIndex, degrees: &[u32]) -> Result<u32> {
    word.0
        .iter()
        .map(|&i| {
            degrees.get(i).copied().ok_or(Error::IndexOutOfRange {
                index: i,
                len: degrees.len(),
            })
        })
        .sum()
}

/// Linear combination of words, all of the same weight `degree`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorSpec {
    nfields: usize,
    terms: BTreeMap<MultiIndex, Rational>,
    degree: u32,
}

impl OperatorSpec {
    /// Merge repeated words, drop zeros, and check homogeneity.
    pub fn new(
        terms: impl IntoIterator<Item = (Rational, MultiIndex)>,
        degrees: &[u32],
    ) -> Result<Self> {
        let mut map: BTreeMap<MultiIndex, Rational> = BTreeMap::new();
        for (c, w) in terms {
            multiindex_weight(&w, degrees)?;
            let e = map.entry(w.clone()).or_insert_with(Rational::zero);
            *e += c;
            if e.is_zero() {
                map.remove(&w);
            }
        }
        let weights: Vec<u32> = map
            .keys()
            .map(|w| multiindex_weight(w, degrees))
            .collect::<Result<_>>()?;
        let mut distinct = weights.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() > 1 {
            return Err(Error::OperatorNotHomogeneous { weights: distinct });
        }
        Ok(OperatorSpec {
            nfields: degrees.len(),
            terms: map,
            degree: distinct.first().copied().unwrap_or(0),
        })
    }

    pub fn nfields(&self) -> usize {
        self.nfields
    }

    /// Homogeneity degree `ν`.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, w: &MultiIndex) -> Rational {
        self.terms.get(w).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest word length.
    pub fn order(&self) -> usize {
        self.terms.keys().map(|w| w.len()).max().unwrap_or(0)
    }

    /// Reindex fields through `map` (old index ↦ new index).
    pub fn reindex(&self, map: &[usize], degrees: &[u32]) -> Result<Self> {
        OperatorSpec::new(
            self.terms
                .iter()
                .map(|(w, c)| (c.clone(), MultiIndex(w.0.iter().map(|i| map[*i]).collect()))),
            degrees,
        )
    }

    /// Non-commutative product `self · other`.
    pub fn compose(&self, other: &OperatorSpec, degrees: &[u32]) -> Result<Self> {
        let mut terms = Vec::new();
        for (wa, ca) in &self.terms {
            for (wb, cb) in &other.terms {
                terms.push((ca * cb, wa.concat(wb)));
            }
        }
        OperatorSpec::new(terms, degrees)
    }

    pub fn render(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (k, (w, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let a = c.abs();
            let word = render_word(w, names);
            if a.is_one() && !w.is_empty() {
                out.push_str(&word);
            } else if w.is_empty() {
                out.push_str(&format_rational(&a));
            } else {
                out.push_str(&format!("{}*{}", format_rational(&a), word));
            }
        }
        out
    }
}

fn render_word(w: &MultiIndex, names: &[String]) -> String {
    // group runs into powers
    let mut parts: Vec<String> = Vec::new();
    let mut i = 0;
    while i < w.0.len() {
        let mut j = i;
        while j < w.0.len() && w.0[j] == w.0[i] {
            j += 1;
        }
        let name = names
            .get(w.0[i])
            .cloned()
            .unwrap_or_else(|| format!("X{}", w.0[i] + 1));
        if j - i == 1 {
            parts.push(name);
        } else {
            parts.push(format!("{}^{}", name, j - i));
        }
        i = j;
    }
    parts.join("*")
}

/// A dilation together with fields that are homogeneous with respect to
/// it, sorted by increasing degree.
#[derive(Clone, Debug)]
pub struct HomogeneousSystem {
    dilation: DilationFamily,
    fields: Vec<PolyVectorField>,
    degrees: Vec<u32>,
    names: Vec<String>,
}

impl HomogeneousSystem {
    /// Certifies every field; fields are stably sorted by degree. The
    /// returned permutation maps input position to stored position.
    pub fn new(
        dilation: DilationFamily,
        fields: Vec<PolyVectorField>,
        names: Vec<String>,
    ) -> Result<(Self, Vec<usize>)> {
        if names.len() != fields.len() {
            return Err(Error::DimensionMismatch {
                expected: fields.len(),
                got: names.len(),
            });
        }
        let mut certified = Vec::with_capacity(fields.len());
        for (i, f) in fields.iter().enumerate() {
            if f.dim() != dilation.dim() {
                return Err(Error::DimensionMismatch {
                    expected: dilation.dim(),
                    got: f.dim(),
                });
            }
            let nu = certify_homogeneity(f, &dilation).ok_or_else(|| Error::NotHomogeneous {
                what: format!("field {} = {}", names[i], f),
            })?;
            certified.push(nu);
        }
        let mut order: Vec<usize> = (0..fields.len()).collect();
        order.sort_by_key(|&i| certified[i]);
        let mut perm = vec![0; fields.len()];
        for (new, &old) in order.iter().enumerate() {
            perm[old] = new;
        }
        Ok((
            HomogeneousSystem {
                dilation,
                fields: order.iter().map(|&i| fields[i].clone()).collect(),
                degrees: order.iter().map(|&i| certified[i]).collect(),
                names: order.iter().map(|&i| names[i].clone()).collect(),
            },
            perm,
        ))
    }

    /// Fields named `X1, X2, …` in the given order.
    pub fn with_default_names(dilation: DilationFamily, fields: Vec<PolyVectorField>) -> Result<Self> {
        let names = (1..=fields.len()).map(|i| format!("X{i}")).collect();
        Ok(Self::new(dilation, fields, names)?.0)
    }

    pub fn dilation(&self) -> &DilationFamily {
        &self.dilation
    }

    pub fn fields(&self) -> &[PolyVectorField] {
        &self.fields
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dim(&self) -> usize {
        self.dilation.dim()
    }

    pub fn homogeneous_dimension(&self) -> u32 {
        self.dilation.homogeneous_dimension()
    }
}

/// `Σ_α a_α(x) ∂^α`, keyed by the multi-exponent `α`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffOperator {
    nvars: usize,
    terms: BTreeMap<Monomial, Polynomial>,
}

impl DiffOperator {
    pub fn zero(nvars: usize) -> Self {
        DiffOperator {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(nvars: usize) -> Self {
        let mut d = Self::zero(nvars);
        d.terms.insert(Monomial::one(nvars), Polynomial::one(nvars));
        d
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Polynomial)> {
        self.terms.iter()
    }

    pub fn coeff(&self, alpha: &Monomial) -> Polynomial {
        self.terms.get(alpha).cloned().unwrap_or_else(|| Polynomial::zero(self.nvars))
    }

    fn add_term(&mut self, alpha: Monomial, a: Polynomial) {
        if a.is_zero() {
            return;
        }
        let e = self
            .terms
            .entry(alpha.clone())
            .or_insert_with(|| Polynomial::zero(a.nvars()));
        *e = &*e + &a;
        if e.is_zero() {
            self.terms.remove(&alpha);
        }
    }

    pub fn add(&self, other: &DiffOperator) -> DiffOperator {
        let mut out = self.clone();
        for (a, c) in &other.terms {
            out.add_term(a.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> DiffOperator {
        let mut out = DiffOperator::zero(self.nvars);
        for (a, p) in &self.terms {
            out.add_term(a.clone(), p.scale(c));
        }
        out
    }

    pub fn sub(&self, other: &DiffOperator) -> DiffOperator {
        self.add(&other.scale(&-Rational::one()))
    }

    /// `X ∘ self`.
    pub fn compose_field_left(&self, x: &PolyVectorField) -> DiffOperator {
        let mut out = DiffOperator::zero(self.nvars);
        for (alpha, a) in &self.terms {
            for (j, c) in x.coeffs().iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                out.add_term(alpha.clone(), c * &a.diff(j).expect("index in range"));
                let mut beta = alpha.clone();
                beta.0[j] += 1;
                out.add_term(beta, c * a);
            }
        }
        out
    }

    /// Expansion of `X_{i_1} … X_{i_k}`.
    pub fn from_word(fields: &[PolyVectorField], word: &MultiIndex) -> DiffOperator {
        let n = fields[0].dim();
        let mut op = DiffOperator::identity(n);
        for &i in word.0.iter().rev() {
            op = op.compose_field_left(&fields[i]);
        }
        op
    }

    /// Expansion of `Σ c_I X_I`. Shares suffix expansions between words.
    pub fn from_operator(fields: &[PolyVectorField], op: &OperatorSpec) -> DiffOperator {
        let n = fields[0].dim();
        let mut cache: BTreeMap<Vec<usize>, DiffOperator> = BTreeMap::new();
        cache.insert(Vec::new(), DiffOperator::identity(n));
        let mut out = DiffOperator::zero(n);
        for (w, c) in op.terms() {
            let expanded = expand_cached(fields, &w.0, &mut cache);
            out = out.add(&expanded.scale(c));
        }
        out
    }

    pub fn apply(&self, u: &Polynomial) -> Result<Polynomial> {
        let mut out = Polynomial::zero(self.nvars);
        for (alpha, a) in &self.terms {
            let mut d = u.clone();
            for (i, e) in alpha.0.iter().enumerate() {
                for _ in 0..*e {
                    d = d.diff(i)?;
                }
            }
            out = &out + &(a * &d);
        }
        Ok(out)
    }

    /// Formal adjoint `P* u = Σ (−1)^{|α|} ∂^α (a_α u)`, expanded.
    pub fn formal_adjoint(&self) -> DiffOperator {
        let n = self.nvars;
        let mut out = DiffOperator::zero(n);
        for (alpha, a) in &self.terms {
            // ∂^α ∘ a as an operator, via repeated ∂_i ∘ P = P' + P∂_i
            let mut op = DiffOperator::zero(n);
            op.add_term(Monomial::one(n), a.clone());
            for (i, e) in alpha.0.iter().enumerate() {
                for _ in 0..*e {
                    op = op.compose_field_left(&PolyVectorField::coordinate(n, i));
                }
            }
            let sign = if alpha.degree() % 2 == 0 { int(1) } else { int(-1) };
            out = out.add(&op.scale(&sign));
        }
        out
    }

    /// Canonical rendering `Σ a_α(x) D^α`, highest derivatives first.
    pub fn render_with(&self, names: &dyn Fn(usize) -> String) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (alpha, a) in self.terms.iter().rev() {
            let mut d = Vec::new();
            for (i, e) in alpha.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => d.push(format!("D{}", names(i))),
                    _ => d.push(format!("D{}^{}", names(i), e)),
                }
            }
            let coeff = a.render_with(names);
            if d.is_empty() {
                parts.push(format!("({coeff})"));
            } else {
                parts.push(format!("({coeff})*{}", d.join("*")));
            }
        }
        parts.join(" + ")
    }
}

impl fmt::Display for DiffOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_with(&|i| format!("x{}", i + 1)))
    }
}

fn expand_cached(
    fields: &[PolyVectorField],
    word: &[usize],
    cache: &mut BTreeMap<Vec<usize>, DiffOperator>,
) -> DiffOperator {
    if let Some(d) = cache.get(word) {
        return d.clone();
    }
    let tail = expand_cached(fields, &word[1..], cache);
    let out = tail.compose_field_left(&fields[word[0]]);
    cache.insert(word.to_vec(), out.clone());
    out
}

/// `L* = Σ (−1)^k c_I X_{i_k} … X_{i_1}`, valid when every field has zero
/// divergence (so that `X* = −X`).
pub fn operator_transpose(op: &OperatorSpec, fields: &[PolyVectorField], degrees: &[u32]) -> Result<OperatorSpec> {
    for (i, f) in fields.iter().enumerate() {
        let d = f.divergence();
        if !d.is_zero() {
            return Err(Error::NonzeroDivergence {
                index: i,
                divergence: d.to_string(),
            });
        }
    }
    OperatorSpec::new(
        op.terms().map(|(w, c)| {
            let sign = if w.len() % 2 == 0 { c.clone() } else { -c.clone() };
            (sign, w.reversed())
        }),
        degrees,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardOperator {
    /// `(Σ_j (−1)^{ν0/ν_j} X_j^{2ν0/ν_j})^k`
    RocklandPower,
    /// `(Σ_j X_j²)^k`
    SublaplacianPower,
    /// `Σ_j X_j^{2ν0}` (all fields of degree one)
    SumOfEvenPowers,
    /// `(Σ_j X_j² + X_0)^k` with a drift `X_0` of degree two
    HormanderPower,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StandardParams {
    pub nu0: u32,
    pub k: u32,
    /// Index of the drift field, for `HormanderPower`.
    pub drift: Option<usize>,
}

fn op_power(base: &OperatorSpec, k: u32, degrees: &[u32]) -> Result<OperatorSpec> {
    let mut acc = OperatorSpec::new([(Rational::one(), MultiIndex(vec![]))], degrees)?;
    for _ in 0..k {
        acc = acc.compose(base, degrees)?;
    }
    Ok(acc)
}

/// Build one of the standard generalized Rockland operators over fields
/// with the given degrees.
pub fn make_standard_operator(kind: StandardOperator, degrees: &[u32], params: &StandardParams) -> Result<OperatorSpec> {
    if params.k == 0 {
        return Err(Error::InvalidArgument("power k must be positive".into()));
    }
    let pure: Vec<usize> = (0..degrees.len()).filter(|&j| Some(j) != params.drift).collect();
    match kind {
        StandardOperator::RocklandPower => {
            let nu0 = params.nu0;
            let pure_deg: Vec<u32> = pure.iter().map(|&j| degrees[j]).collect();
            if nu0 == 0 || pure_deg.iter().any(|d| nu0 % d != 0) {
                return Err(Error::NotCommonMultiple { nu: nu0, degrees: pure_deg });
            }
            let base = OperatorSpec::new(
                pure.iter().map(|&j| {
                    let r = nu0 / degrees[j];
                    let sign = if r % 2 == 0 { int(1) } else { int(-1) };
                    (sign, MultiIndex(vec![j; 2 * r as usize]))
                }),
                degrees,
            )?;
            op_power(&base, params.k, degrees)
        }
        StandardOperator::SublaplacianPower => {
            let base = OperatorSpec::new(pure.iter().map(|&j| (int(1), MultiIndex(vec![j, j]))), degrees)?;
            op_power(&base, params.k, degrees)
        }
        StandardOperator::SumOfEvenPowers => {
            if pure.iter().any(|&j| degrees[j] != 1) {
                return Err(Error::InvalidArgument("sum of even powers needs fields of degree one".into()));
            }
            if params.nu0 == 0 {
                return Err(Error::InvalidArgument("nu0 must be positive".into()));
            }
            OperatorSpec::new(
                pure.iter()
                    .map(|&j| (int(1), MultiIndex(vec![j; 2 * params.nu0 as usize]))),
                degrees,
            )
        }
        StandardOperator::HormanderPower => {
            let d = params.drift.ok_or(Error::MissingDrift)?;
            if degrees.get(d) != Some(&2) {
                return Err(Error::MissingDrift);
            }
            if pure.iter().any(|&j| degrees[j] != 1) {
                return Err(Error::InvalidArgument(
                    "Hörmander operator needs non-drift fields of degree one".into(),
                ));
            }
            let base = OperatorSpec::new(
                pure.iter()
                    .map(|&j| (int(1), MultiIndex(vec![j, j])))
                    .chain([(int(1), MultiIndex(vec![d]))]),
                degrees,
            )?;
            op_power(&base, params.k, degrees)
        }
    }
}

/// True iff `±L` is `Σ_j (−1)^{ν0/ν_j} X_j^{2ν0/ν_j}` over every field of
/// the system for some common multiple `ν0`.
pub fn classify_positive_rockland_pattern(op: &OperatorSpec, degrees: &[u32]) -> bool {
    if op.num_terms() != degrees.len() || degrees.is_empty() {
        return false;
    }
    let mut nu0 = None;
    let mut overall: Option<bool> = None;
    for (w, c) in op.terms() {
        let Some(&j) = w.0.first() else { return false };
        if w.0.iter().any(|&i| i != j) || w.len() % 2 != 0 {
            return false;
        }
        let this_nu0 = (w.len() as u32 / 2) * degrees[j];
        if *nu0.get_or_insert(this_nu0) != this_nu0 {
            return false;
        }
        let expected_positive = (this_nu0 / degrees[j]) % 2 == 0;
        let is_positive = if c == &int(1) {
            true
        } else if c == &int(-1) {
            false
        } else {
            return false;
        };
        let agrees = expected_positive == is_positive;
        if *overall.get_or_insert(agrees) != agrees {
            return false;
        }
    }
    // every field appears exactly once
    let mut seen: Vec<usize> = op.terms().map(|(w, _)| w.0[0]).collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len() == degrees.len()
}

/// The operator `L ± ∂_t` on `R^{n+1}` with the extended dilation
/// `δ'_λ(x, t) = (δ_λ x, λ^ν t)`.
#[derive(Clone, Debug)]
pub struct HeatExtension {
    pub dilation: DilationFamily,
    /// Original fields on `n+1` variables followed by `∂_t`.
    pub fields: Vec<PolyVectorField>,
    pub degrees: Vec<u32>,
    pub operator: OperatorSpec,
    pub time_exponent: u32,
    pub sign: i32,
}

impl HeatExtension {
    pub fn homogeneous_dimension(&self) -> u32 {
        self.dilation.homogeneous_dimension()
    }

    /// Certify every field (including `∂_t`) against the extended dilation
    /// and return their degrees.
    pub fn certify(&self) -> Result<Vec<u32>> {
        self.fields
            .iter()
            .enumerate()
            .map(|(i, f)| {
                certify_with_exponents(f, self.dilation.sigma()).ok_or_else(|| Error::NotHomogeneous {
                    what: format!("extended field {}", i + 1),
                })
            })
            .collect()
    }
}

pub fn heat_extend(system: &HomogeneousSystem, op: &OperatorSpec, sign: i32) -> Result<HeatExtension> {
    if sign != 1 && sign != -1 {
        return Err(Error::InvalidArgument("sign must be +1 or -1".into()));
    }
    let nu = op.degree();
    if nu == 0 {
        return Err(Error::InvalidArgument("operator must have positive degree".into()));
    }
    let n = system.dim();
    let mut sigma = system.dilation().sigma().to_vec();
    sigma.push(nu);
    let dilation = DilationFamily::general(sigma)?;
    let mut fields: Vec<PolyVectorField> = system.fields().iter().map(|f| f.extend(n + 1)).collect();
    fields.push(PolyVectorField::coordinate(n + 1, n));
    let mut degrees = system.degrees().to_vec();
    degrees.push(nu);
    let t = system.fields().len();
    let operator = OperatorSpec::new(
        op.terms()
            .map(|(w, c)| (c.clone(), w.clone()))
            .chain([(int(sign as i64), MultiIndex(vec![t]))]),
        &degrees,
    )?;
    Ok(HeatExtension {
        dilation,
        fields,
        degrees,
        operator,
        time_exponent: nu,
        sign,
    })
}

/// Least common multiple of the degrees.
pub fn lcm_of(degrees: &[u32]) -> u32 {
    degrees.iter().fold(1, |a, b| a.lcm(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactpoly::rat;

    fn grushin() -> Vec<PolyVectorField> {
        vec![
            PolyVectorField::coordinate(2, 0),
            PolyVectorField::new(vec![Polynomial::zero(2), Polynomial::var(2, 0)]).unwrap(),
        ]
    }

    #[test]
    fn dilation_validation() {
        assert!(DilationFamily::new(vec![1, 2]).is_ok());
        assert!(DilationFamily::new(vec![2, 1]).is_err());
        assert!(DilationFamily::new(vec![2, 3]).is_err());
        assert_eq!(DilationFamily::new(vec![1, 1, 2]).unwrap().homogeneous_dimension(), 4);
    }

    #[test]
    fn commutator_examples() {
        let g = grushin();
        let c = g[0].commutator(&g[1]).unwrap();
        assert_eq!(c, PolyVectorField::coordinate(2, 1));
        assert!(g[1].commutator(&g[1]).unwrap().is_zero());
        // [∂1, x1^3 ∂2] = 3 x1^2 ∂2
        let x3 = PolyVectorField::new(vec![Polynomial::zero(2), Polynomial::var(2, 0).pow(3)]).unwrap();
        let c3 = g[0].commutator(&x3).unwrap();
        assert_eq!(c3.coeff(1), &Polynomial::var(2, 0).pow(2).scale(&int(3)));
    }

    #[test]
    fn homogeneity_examples() {
        for (k, h) in [(1, 1), (2, 3), (3, 1)] {
            let d = DilationFamily::new(vec![1, k + h]).unwrap();
            let x = PolyVectorField::new(vec![Polynomial::zero(2), Polynomial::var(2, 0).pow(k)]).unwrap();
            assert_eq!(certify_homogeneity(&x, &d), Some(h));
            assert_eq!(certify_homogeneity(&PolyVectorField::coordinate(2, 0), &d), Some(1));
        }
        let d = DilationFamily::new(vec![1, 2]).unwrap();
        let sum = PolyVectorField::coordinate(2, 0)
            .add(&PolyVectorField::coordinate(2, 1))
            .unwrap();
        assert_eq!(certify_homogeneity(&sum, &d), None);
    }

    #[test]
    fn weights() {
        assert_eq!(multiindex_weight(&MultiIndex(vec![0, 0, 0, 0]), &[1, 1]).unwrap(), 4);
        assert_eq!(multiindex_weight(&MultiIndex(vec![1, 1]), &[1, 2]).unwrap(), 4);
        assert_eq!(multiindex_weight(&MultiIndex(vec![0, 1, 1]), &[1, 2]).unwrap(), 5);
        assert!(multiindex_weight(&MultiIndex(vec![2]), &[1, 2]).is_err());
    }

    #[test]
    fn standard_operators() {
        let p = |nu0, k| StandardParams { nu0, k, drift: None };
        let sum = make_standard_operator(StandardOperator::SumOfEvenPowers, &[1, 1], &p(2, 1)).unwrap();
        assert_eq!(sum.degree(), 4);
        assert_eq!(sum.render(&["X1".into(), "X2".into()]), "X1^4 + X2^4");
        let sub = make_standard_operator(StandardOperator::SublaplacianPower, &[1, 1], &p(1, 1)).unwrap();
        assert_eq!(sub.degree(), 2);
        let rock = make_standard_operator(StandardOperator::RocklandPower, &[1, 2], &p(2, 1)).unwrap();
        assert_eq!(rock.degree(), 4);
        assert_eq!(rock.coeff(&MultiIndex(vec![0; 4])), int(1));
        assert_eq!(rock.coeff(&MultiIndex(vec![1, 1])), int(-1));
        assert!(make_standard_operator(StandardOperator::RocklandPower, &[1, 2], &p(3, 1)).is_err());
        assert_eq!(
            make_standard_operator(StandardOperator::HormanderPower, &[1, 1, 2], &p(1, 1)),
            Err(Error::MissingDrift)
        );
        let hp = make_standard_operator(
            StandardOperator::HormanderPower,
            &[1, 1, 2],
            &StandardParams { nu0: 1, k: 2, drift: Some(2) },
        )
        .unwrap();
        assert_eq!(hp.degree(), 4);
        assert_eq!(hp.num_terms(), 9);
    }

    #[test]
    fn classification() {
        let p = |nu0| StandardParams { nu0, k: 1, drift: None };
        let sum = make_standard_operator(StandardOperator::SumOfEvenPowers, &[1, 1], &p(2)).unwrap();
        assert!(classify_positive_rockland_pattern(&sum, &[1, 1]));
        let sub = make_standard_operator(StandardOperator::SublaplacianPower, &[1, 1], &p(1)).unwrap();
        assert!(classify_positive_rockland_pattern(&sub, &[1, 1]));
        let rock = make_standard_operator(StandardOperator::RocklandPower, &[1, 2], &p(2)).unwrap();
        assert!(classify_positive_rockland_pattern(&rock, &[1, 2]));
        let hp = make_standard_operator(
            StandardOperator::HormanderPower,
            &[1, 1, 2],
            &StandardParams { nu0: 1, k: 1, drift: Some(2) },
        )
        .unwrap();
        assert!(!classify_positive_rockland_pattern(&hp, &[1, 1, 2]));
        let mixed = OperatorSpec::new([(int(1), MultiIndex(vec![0, 0])), (int(-1), MultiIndex(vec![1, 1]))], &[1, 1]).unwrap();
        assert!(!classify_positive_rockland_pattern(&mixed, &[1, 1]));
    }

    #[test]
    fn transpose_examples() {
        let g = grushin();
        let sq = OperatorSpec::new([(int(1), MultiIndex(vec![0, 0]))], &[1, 1]).unwrap();
        assert_eq!(operator_transpose(&sq, &g, &[1, 1]).unwrap(), sq);
        let w = OperatorSpec::new([(rat(1, 2), MultiIndex(vec![0, 1, 1]))], &[1, 1]).unwrap();
        let t = operator_transpose(&w, &g, &[1, 1]).unwrap();
        assert_eq!(t.coeff(&MultiIndex(vec![1, 1, 0])), rat(-1, 2));
        let radial = PolyVectorField::new(vec![Polynomial::var(2, 0), Polynomial::zero(2)]).unwrap();
        assert!(matches!(
            operator_transpose(&sq, &[radial], &[1]),
            Err(Error::NonzeroDivergence { .. })
        ));
    }

    #[test]
    fn transpose_agrees_with_formal_adjoint() {
        let g = grushin();
        let op = OperatorSpec::new(
            [(int(1), MultiIndex(vec![0, 1, 1])), (int(3), MultiIndex(vec![1, 0, 1]))],
            &[1, 1],
        )
        .unwrap();
        let t = operator_transpose(&op, &g, &[1, 1]).unwrap();
        let lhs = DiffOperator::from_operator(&g, &t);
        let rhs = DiffOperator::from_operator(&g, &op).formal_adjoint();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn heat_extension_of_sublaplacian() {
        let d = DilationFamily::new(vec![1, 2]).unwrap();
        let sys = HomogeneousSystem::with_default_names(d, grushin()).unwrap();
        let op = make_standard_operator(
            StandardOperator::SublaplacianPower,
            sys.degrees(),
            &StandardParams { nu0: 1, k: 1, drift: None },
        )
        .unwrap();
        let h = heat_extend(&sys, &op, -1).unwrap();
        assert_eq!(h.dilation.sigma(), &[1, 2, 2]);
        assert_eq!(h.homogeneous_dimension(), 5);
        assert_eq!(h.certify().unwrap(), vec![1, 1, 2]);
        assert_eq!(h.operator.degree(), 2);
        assert_eq!(h.operator.coeff(&MultiIndex(vec![2])), int(-1));
    }

    #[test]
    fn diff_operator_expansion() {
        let g = grushin();
        // X2^2 = x1^2 D2^2
        let op = DiffOperator::from_word(&g, &MultiIndex(vec![1, 1]));
        assert_eq!(op.to_string(), "(x1^2)*Dx2^2");
        // X1 X2 = x1 D1 D2 + D2
        let op = DiffOperator::from_word(&g, &MultiIndex(vec![0, 1]));
        assert_eq!(op.to_string(), "(x1)*Dx1*Dx2 + (1)*Dx2");
    }
}
