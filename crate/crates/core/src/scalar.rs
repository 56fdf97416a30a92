//! Floating point scalars used by compiled polynomial evaluation.
//!
//! `f64` is the plain case. [`Jet`] carries first order sensitivities in
//! several independent directions at once, with all mixed products kept:
//! it is a truncated multivariate Taylor expansion in which every direction
//! squares to zero. Evaluating `f(z ⋆ γ1(t1) ⋆ … ⋆ γs(ts))` on jets yields
//! the iterated derivative `∂t1 … ∂ts` as the top coefficient.

use std::ops::{Add, Mul, Neg, Sub};

pub trait Scalar:
    Clone
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn from_f64(v: f64) -> Self;
    /// The real part (the function value).
    fn value(&self) -> f64;
    fn scale(&self, c: f64) -> Self;
    /// `self^e` for a real exponent; the value must be positive unless `e`
    /// is a non-negative integer.
    fn powf(&self, e: f64) -> Self;
    fn abs(&self) -> Self;
    fn ln(&self) -> Self;

    fn powu(&self, k: u32) -> Self {
        let mut acc = Self::from_f64(1.0);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base.clone();
            }
            k >>= 1;
            if k > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    fn powf(&self, e: f64) -> Self {
        f64::powf(*self, e)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn powu(&self, k: u32) -> Self {
        f64::powi(*self, k as i32)
    }
}

/// Multilinear jet in `s` directions: `coeffs[mask]` multiplies
/// `Π_{k ∈ mask} ε_k`. A jet of length one is a constant.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub coeffs: Vec<f64>,
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Jet { coeffs: vec![v] }
    }

    /// `v + ε_k` in a space of `s` directions.
    pub fn variable(v: f64, k: usize, s: usize) -> Self {
        let mut coeffs = vec![0.0; 1 << s];
        coeffs[0] = v;
        coeffs[1 << k] = 1.0;
        Jet { coeffs }
    }

    pub fn zero(s: usize) -> Self {
        Jet {
            coeffs: vec![0.0; 1 << s],
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of `ε_0 ε_1 … ε_{s-1}`.
    pub fn top(&self) -> f64 {
        *self.coeffs.last().unwrap_or(&0.0)
    }

    fn widen(&self, len: usize) -> Vec<f64> {
        if self.coeffs.len() == len {
            self.coeffs.clone()
        } else {
            let mut v = vec![0.0; len];
            v[0] = self.coeffs[0];
            v
        }
    }

    fn zip(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        let len = self.len().max(other.len());
        let a = self.widen(len);
        let b = other.widen(len);
        Jet {
            coeffs: a.iter().zip(&b).map(|(x, y)| f(*x, *y)).collect(),
        }
    }

    /// Apply a smooth scalar function given its derivatives at the value:
    /// `derivs[k] = f^{(k)}(value)` for `k = 0..=s`.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        if self.len() == 1 {
            return Jet::constant(derivs[0]);
        }
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut out = Jet {
            coeffs: vec![0.0; self.len()],
        };
        out.coeffs[0] = derivs[0];
        let mut power = Jet::constant(1.0);
        let mut fact = 1.0;
        for (k, d) in derivs.iter().enumerate().skip(1) {
            power = power * delta.clone();
            fact *= k as f64;
            if power.coeffs.iter().all(|c| *c == 0.0) {
                break;
            }
            let w = d / fact;
            for (o, p) in out.coeffs.iter_mut().zip(&power.coeffs) {
                *o += w * p;
            }
        }
        out
    }

    fn order(&self) -> usize {
        self.len().trailing_zeros() as usize
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        self.zip(&o, |a, b| a + b)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self.zip(&o, |a, b| a - b)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        if self.len() == 1 {
            return o.scale(self.coeffs[0]);
        }
        if o.len() == 1 {
            return self.scale(o.coeffs[0]);
        }
        let len = self.len().max(o.len());
        let a = self.widen(len);
        let b = o.widen(len);
        let mut out = vec![0.0; len];
        for (m, slot) in out.iter_mut().enumerate() {
            // enumerate submasks of m
            let mut sub = m;
            let mut acc = 0.0;
            loop {
                acc += a[sub] * b[m ^ sub];
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & m;
            }
            *slot = acc;
        }
        Jet { coeffs: out }
    }
}

impl Scalar for Jet {
    fn from_f64(v: f64) -> Self {
        Jet::constant(v)
    }
    fn value(&self) -> f64 {
        self.coeffs[0]
    }
    fn scale(&self, c: f64) -> Self {
        Jet {
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }
    fn powf(&self, e: f64) -> Self {
        let s = self.order();
        let x = self.coeffs[0];
        let mut derivs = Vec::with_capacity(s + 1);
        let mut fall = 1.0;
        for k in 0..=s {
            derivs.push(fall * x.powf(e - k as f64));
            fall *= e - k as f64;
        }
        self.compose(&derivs)
    }
    fn abs(&self) -> Self {
        if self.coeffs[0] < 0.0 {
            -self.clone()
        } else {
            self.clone()
        }
    }
    fn ln(&self) -> Self {
        let s = self.order();
        let x = self.coeffs[0];
        let mut derivs = vec![x.ln()];
        let mut fact = 1.0;
        for k in 1..=s {
            // d^k ln x = (-1)^{k-1} (k-1)! x^{-k}
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            derivs.push(sign * fact * x.powi(-(k as i32)));
            fact *= k as f64;
        }
        self.compose(&derivs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_partial_of_product() {
        // f(a, b) = a^2 b at (2, 3); ∂a∂b f = 2a = 4
        let a = Jet::variable(2.0, 0, 2);
        let b = Jet::variable(3.0, 1, 2);
        let f = a.clone() * a * b;
        assert_eq!(f.coeffs, vec![12.0, 12.0, 4.0, 4.0]);
    }

    #[test]
    fn powf_matches_closed_form() {
        // g(t1, t2) = (1 + t1 + t2)^{-1/2}; ∂1∂2 g(0) = 3/4
        let x = Jet::variable(1.0, 0, 2) + Jet::variable(0.0, 1, 2);
        let g = x.powf(-0.5);
        assert!((g.top() - 0.75).abs() < 1e-15);
        assert!((g.coeffs[1] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn ln_derivatives() {
        let x = Jet::variable(2.0, 0, 2) + Jet::variable(0.0, 1, 2);
        let g = x.ln();
        assert!((g.coeffs[1] - 0.5).abs() < 1e-15);
        assert!((g.top() + 0.25).abs() < 1e-15);
    }
}
