//! Baker–Campbell–Hausdorff products in exponential coordinates.
//!
//! `log(e^A e^B) = Σ_w c_w [w]` over words `w` in `{A, B}` of length up to
//! the nilpotency step, where `[w]` is the right-nested bracket
//! `[w_1, [w_2, … [w_{d−1}, w_d]]]` and `c_w` comes from Dynkin's formula.
//! Coefficients are exact rationals computed once per word length.

use std::collections::HashMap;
use std::sync::OnceLock;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exactpoly::{int, Polynomial, Rational};
use crate::liealg::StructureConstants;
use crate::scalar::Jet;

/// Largest supported nilpotency step.
pub const MAX_STEP: usize = 6;

/// Coefficient ring for vectors in exponential coordinates.
pub trait LieCoeff: Clone {
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, c: &Rational) -> Self;
    fn vanishes(&self) -> bool;
}

impl LieCoeff for Rational {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, c: &Rational) -> Self {
        self * c
    }
    fn vanishes(&self) -> bool {
        Zero::is_zero(self)
    }
}

impl LieCoeff for Polynomial {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, c: &Rational) -> Self {
        Polynomial::scale(self, c)
    }
    fn vanishes(&self) -> bool {
        Polynomial::is_zero(self)
    }
}

impl LieCoeff for f64 {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, c: &Rational) -> Self {
        self * crate::exactpoly::to_f64(c)
    }
    fn vanishes(&self) -> bool {
        *self == 0.0
    }
}

impl LieCoeff for Jet {
    fn add(&self, o: &Self) -> Self {
        self.clone() + o.clone()
    }
    fn mul(&self, o: &Self) -> Self {
        self.clone() * o.clone()
    }
    fn scale(&self, c: &Rational) -> Self {
        crate::scalar::Scalar::scale(self, crate::exactpoly::to_f64(c))
    }
    fn vanishes(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }
}

fn factorial(k: usize) -> Rational {
    (1..=k as i64).fold(Rational::one(), |acc, i| acc * int(i))
}

/// Dynkin coefficient of a word (`false` = A, `true` = B).
fn dynkin_coefficient(word: &[bool]) -> Rational {
    let d = word.len();
    // ways[pos][k]: Σ over splittings of word[..pos] into k blocks A^r B^s
    // (r + s > 0) of Π 1/(r! s!)
    let mut ways = vec![vec![Rational::zero(); d + 1]; d + 1];
    ways[0][0] = Rational::one();
    for start in 0..d {
        for k in 0..d {
            if ways[start][k].is_zero() {
                continue;
            }
            let base = ways[start][k].clone();
            // extend with a block word[start..end] of the form A^r B^s
            let mut r = 0;
            let mut s = 0;
            for end in start..d {
                if word[end] {
                    s += 1;
                } else if s == 0 {
                    r += 1;
                } else {
                    break;
                }
                let w = &base / (factorial(r) * factorial(s));
                ways[end + 1][k + 1] += w;
            }
        }
    }
    let mut total = Rational::zero();
    for k in 1..=d {
        if ways[d][k].is_zero() {
            continue;
        }
        let sign = if k % 2 == 1 { int(1) } else { int(-1) };
        total += sign * &ways[d][k] / (int(k as i64) * int(d as i64));
    }
    total
}

/// Nonzero Dynkin coefficients for all words up to `MAX_STEP`.
fn dynkin_table() -> &'static Vec<(Vec<bool>, Rational)> {
    static TABLE: OnceLock<Vec<(Vec<bool>, Rational)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = Vec::new();
        for d in 1..=MAX_STEP {
            for bits in 0u32..(1 << d) {
                let word: Vec<bool> = (0..d).map(|i| bits & (1 << (d - 1 - i)) != 0).collect();
                // right-nested brackets ending in a repeated letter vanish
                if d >= 2 && word[d - 1] == word[d - 2] {
                    continue;
                }
                let c = dynkin_coefficient(&word);
                if !c.is_zero() {
                    out.push((word, c));
                }
            }
        }
        out
    })
}

/// Dynkin coefficient of a word given as a string over `{'A','B'}`,
/// exposed for inspection and tests.
pub fn coefficient_of(word: &str) -> Rational {
    let w: Vec<bool> = word.chars().map(|c| c == 'B').collect();
    dynkin_coefficient(&w)
}

/// `[u, v]` for coordinate vectors over any coefficient ring.
pub fn bracket<C: LieCoeff>(sc: &StructureConstants, u: &[Option<C>], v: &[Option<C>]) -> Vec<Option<C>> {
    let n = sc.dim();
    let mut out: Vec<Option<C>> = vec![None; n];
    for (i, ui) in u.iter().enumerate() {
        let Some(ui) = ui else { continue };
        for (j, vj) in v.iter().enumerate() {
            let Some(vj) = vj else { continue };
            let terms = sc.bracket_terms(i, j);
            if terms.is_empty() {
                continue;
            }
            let p = ui.mul(vj);
            for (k, c) in terms {
                let t = p.scale(c);
                out[*k] = Some(match out[*k].take() {
                    None => t,
                    Some(acc) => acc.add(&t),
                });
            }
        }
    }
    for slot in out.iter_mut() {
        if slot.as_ref().is_some_and(|c| c.vanishes()) {
            *slot = None;
        }
    }
    out
}

/// `a ⋆ b = log(e^a e^b)` truncated at `step`. Missing entries (`None`)
/// stand for zero.
pub fn bch_generic<C: LieCoeff>(sc: &StructureConstants, step: usize, a: &[Option<C>], b: &[Option<C>]) -> Result<Vec<Option<C>>> {
    if step > MAX_STEP {
        return Err(Error::InvalidArgument(format!(
            "nilpotency step {step} exceeds the supported maximum {MAX_STEP}; \
             extend the Dynkin table to handle deeper algebras"
        )));
    }
    let n = sc.dim();
    if a.len() != n || b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.len().min(b.len()),
        });
    }
    let mut memo: HashMap<Vec<bool>, Vec<Option<C>>> = HashMap::new();
    let mut out: Vec<Option<C>> = vec![None; n];
    for (word, c) in dynkin_table() {
        if word.len() > step.max(1) {
            continue;
        }
        let v = nested(sc, word, a, b, &mut memo);
        for (k, vk) in v.iter().enumerate() {
            if let Some(vk) = vk {
                let t = vk.scale(c);
                out[k] = Some(match out[k].take() {
                    None => t,
                    Some(acc) => acc.add(&t),
                });
            }
        }
    }
    for slot in out.iter_mut() {
        if slot.as_ref().is_some_and(|c| c.vanishes()) {
            *slot = None;
        }
    }
    Ok(out)
}

fn nested<C: LieCoeff>(
    sc: &StructureConstants,
    word: &[bool],
    a: &[Option<C>],
    b: &[Option<C>],
    memo: &mut HashMap<Vec<bool>, Vec<Option<C>>>,
) -> Vec<Option<C>> {
    if let Some(v) = memo.get(word) {
        return v.clone();
    }
    let letter = |x: bool| if x { b.to_vec() } else { a.to_vec() };
    let v = if word.len() == 1 {
        letter(word[0])
    } else {
        let tail = nested(sc, &word[1..], a, b, memo);
        if tail.iter().all(|t| t.is_none()) {
            tail
        } else {
            bracket(sc, &letter(word[0]), &tail)
        }
    };
    memo.insert(word.to_vec(), v.clone());
    v
}

/// Exact BCH product of rational vectors.
pub fn bch_product(sc: &StructureConstants, step: usize, a: &[Rational], b: &[Rational]) -> Result<Vec<Rational>> {
    let wrap = |v: &[Rational]| -> Vec<Option<Rational>> {
        v.iter().map(|c| (!c.is_zero()).then(|| c.clone())).collect()
    };
    let out = bch_generic(sc, step, &wrap(a), &wrap(b))?;
    Ok(out.into_iter().map(|c| c.unwrap_or_else(Rational::zero)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactpoly::rat;

    fn heisenberg() -> StructureConstants {
        let mut c = vec![vec![vec![Rational::zero(); 3]; 3]; 3];
        c[0][1][2] = int(1);
        c[1][0][2] = int(-1);
        StructureConstants::from_dense(&c)
    }

    #[test]
    fn word_coefficients() {
        // ½[A,B] splits as ¼ on AB and ¼ on −BA
        assert_eq!(coefficient_of("A"), int(1));
        assert_eq!(coefficient_of("AB"), rat(1, 4));
        assert_eq!(coefficient_of("BA"), rat(-1, 4));
    }

    /// Strictly upper triangular `k×k` matrices with basis `E_ij`, `i<j`.
    fn upper_triangular(k: usize) -> (StructureConstants, Vec<(usize, usize)>) {
        let idx: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
        let pos = |p: (usize, usize)| idx.iter().position(|q| *q == p);
        let n = idx.len();
        let mut c = vec![vec![vec![Rational::zero(); n]; n]; n];
        for (a, &(i, j)) in idx.iter().enumerate() {
            for (b, &(k2, l)) in idx.iter().enumerate() {
                if j == k2 {
                    c[a][b][pos((i, l)).unwrap()] += int(1);
                }
                if l == i {
                    c[a][b][pos((k2, j)).unwrap()] -= int(1);
                }
            }
        }
        (StructureConstants::from_dense(&c), idx)
    }

    fn to_matrix(v: &[Rational], idx: &[(usize, usize)], k: usize) -> Vec<Vec<Rational>> {
        let mut m = vec![vec![Rational::zero(); k]; k];
        for (c, &(i, j)) in v.iter().zip(idx) {
            m[i][j] = c.clone();
        }
        m
    }

    fn matmul(a: &[Vec<Rational>], b: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
        let k = a.len();
        (0..k)
            .map(|i| (0..k).map(|j| (0..k).map(|t| &a[i][t] * &b[t][j]).sum()).collect())
            .collect()
    }

    fn expm(a: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
        let k = a.len();
        let mut term: Vec<Vec<Rational>> = (0..k)
            .map(|i| (0..k).map(|j| if i == j { int(1) } else { int(0) }).collect())
            .collect();
        let mut acc = term.clone();
        for p in 1..k {
            term = matmul(&term, a);
            for i in 0..k {
                for j in 0..k {
                    term[i][j] = &term[i][j] / int(p as i64);
                    acc[i][j] += &term[i][j];
                }
            }
        }
        acc
    }

    #[test]
    fn matches_matrix_exponentials_up_to_step_six() {
        for k in [3usize, 4, 7] {
            let (sc, idx) = upper_triangular(k);
            let n = idx.len();
            let a: Vec<Rational> = (0..n).map(|t| rat((t as i64 % 5) - 2, 3)).collect();
            let b: Vec<Rational> = (0..n).map(|t| rat(((t * 7) as i64 % 4) - 1, 2)).collect();
            let c = bch_product(&sc, k - 1, &a, &b).unwrap();
            let lhs = matmul(&expm(&to_matrix(&a, &idx, k)), &expm(&to_matrix(&b, &idx, k)));
            assert_eq!(lhs, expm(&to_matrix(&c, &idx, k)), "k = {k}");
        }
    }

    #[test]
    fn heisenberg_product() {
        let sc = heisenberg();
        let r = bch_product(&sc, 2, &[int(1), int(0), int(0)], &[int(0), int(1), int(0)]).unwrap();
        assert_eq!(r, vec![int(1), int(1), rat(1, 2)]);
        let a = vec![rat(2, 3), int(-1), int(5)];
        let neg: Vec<Rational> = a.iter().map(|c| -c.clone()).collect();
        assert!(bch_product(&sc, 2, &a, &neg).unwrap().iter().all(|c| c.is_zero()));
    }

    #[test]
    fn abelian_is_sum() {
        let sc = StructureConstants::new(2);
        let r = bch_product(&sc, 1, &[int(1), int(2)], &[int(3), rat(1, 2)]).unwrap();
        assert_eq!(r, vec![int(4), rat(5, 2)]);
    }

    #[test]
    fn step_limit() {
        let sc = heisenberg();
        assert!(bch_product(&sc, 7, &[int(1), int(0), int(0)], &[int(0), int(1), int(0)]).is_err());
    }
}
