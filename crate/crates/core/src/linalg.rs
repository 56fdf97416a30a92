//! Exact linear algebra over the rationals and determinants of polynomial
//! matrices.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::exactpoly::{Polynomial, Rational};

/// Sparse rational vector keyed by any ordered type.
pub type SparseVec<K> = BTreeMap<K, Rational>;

fn axpy<K: Ord + Clone>(y: &mut SparseVec<K>, a: &Rational, x: &SparseVec<K>) {
    for (k, v) in x {
        let e = y.entry(k.clone()).or_insert_with(Rational::zero);
        *e += a * v;
        if e.is_zero() {
            y.remove(k);
        }
    }
}

/// Incremental row echelon form that remembers, for every stored row, its
/// expression in terms of the vectors that were inserted.
#[derive(Clone, Debug)]
pub struct Echelon<K: Ord + Clone> {
    rows: Vec<(K, SparseVec<K>, Vec<Rational>)>,
    inserted: usize,
}

impl<K: Ord + Clone> Default for Echelon<K> {
    fn default() -> Self {
        Echelon {
            rows: Vec::new(),
            inserted: 0,
        }
    }
}

impl<K: Ord + Clone> Echelon<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduce `v` against the stored rows. Returns the remainder and the
    /// coefficients `c` (over inserted vectors) with `v = Σ c_j v_j + rem`.
    pub fn reduce(&self, v: &SparseVec<K>) -> (SparseVec<K>, Vec<Rational>) {
        let mut rem = v.clone();
        let mut combo = vec![Rational::zero(); self.inserted];
        for (pivot, row, rc) in &self.rows {
            if let Some(a) = rem.get(pivot).cloned() {
                axpy(&mut rem, &-a.clone(), row);
                for (c, r) in combo.iter_mut().zip(rc) {
                    *c += &a * r;
                }
            }
        }
        (rem, combo)
    }

    pub fn is_independent(&self, v: &SparseVec<K>) -> bool {
        !self.reduce(v).0.is_empty()
    }

    /// Insert `v` if it is independent of the stored rows; returns whether
    /// it was inserted. Only inserted vectors count as basis vectors.
    pub fn insert(&mut self, v: &SparseVec<K>) -> bool {
        let (rem, combo) = self.reduce(v);
        if rem.is_empty() {
            return false;
        }
        let (pivot, pv) = rem.iter().next().map(|(k, v)| (k.clone(), v.clone())).unwrap();
        let inv = Rational::one() / pv;
        let row: SparseVec<K> = rem.into_iter().map(|(k, v)| (k, v * &inv)).collect();
        // row = (v - Σ combo_j v_j) / pv
        let mut rc: Vec<Rational> = combo.iter().map(|c| -(c * &inv)).collect();
        rc.push(inv);
        for (_, _, r) in self.rows.iter_mut() {
            r.push(Rational::zero());
        }
        // keep earlier rows reduced against the new pivot
        for i in 0..self.rows.len() {
            if let Some(a) = self.rows[i].1.get(&pivot).cloned() {
                axpy(&mut self.rows[i].1, &-a.clone(), &row);
                for (c, r) in self.rows[i].2.iter_mut().zip(&rc) {
                    *c -= &a * r;
                }
            }
        }
        self.rows.push((pivot, row, rc));
        self.inserted += 1;
        true
    }

    /// Coefficients of `v` in the inserted basis, if `v` lies in the span.
    pub fn express(&self, v: &SparseVec<K>) -> Option<Vec<Rational>> {
        let (rem, combo) = self.reduce(v);
        rem.is_empty().then_some(combo)
    }
}

/// Dense rational matrix stored row-major.
pub type Matrix = Vec<Vec<Rational>>;

pub fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
        .collect()
}

pub fn rank(m: &Matrix) -> usize {
    let mut e: Echelon<usize> = Echelon::new();
    for row in m {
        let v: SparseVec<usize> = row.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, c)| (i, c.clone())).collect();
        e.insert(&v);
    }
    e.rank()
}

/// Inverse by Gauss–Jordan elimination; `None` if singular.
pub fn inverse(m: &Matrix) -> Option<Matrix> {
    let n = m.len();
    let mut a: Vec<Vec<Rational>> = m
        .iter()
        .zip(identity(n))
        .map(|(r, i)| r.iter().cloned().chain(i).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        let inv = Rational::one() / a[col][col].clone();
        for v in a[col].iter_mut() {
            *v *= &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (v, p) in a[r].iter_mut().zip(&pivot_row) {
                    *v -= &f * p;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn mat_vec(m: &Matrix, v: &[Rational]) -> Vec<Rational> {
    m.iter()
        .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Determinant of a square polynomial matrix by expansion along columns,
/// memoised over row subsets.
pub fn poly_det(m: &[Vec<Polynomial>], nvars: usize) -> Polynomial {
    let n = m.len();
    if n == 0 {
        return Polynomial::one(nvars);
    }
    // minors[mask] = det of rows in `mask` against the last |mask| columns
    let mut minors: Vec<Option<Polynomial>> = vec![None; 1 << n];
    minors[0] = Some(Polynomial::one(nvars));
    for mask in 1usize..(1 << n) {
        let k = mask.count_ones() as usize;
        let col = n - k;
        let mut acc = Polynomial::zero(nvars);
        let mut pos = 0;
        for r in 0..n {
            if mask & (1 << r) == 0 {
                continue;
            }
            let entry = &m[r][col];
            if !entry.is_zero() {
                if let Some(sub) = &minors[mask & !(1 << r)] {
                    if !sub.is_zero() {
                        let t = entry * sub;
                        if pos % 2 == 0 {
                            acc = &acc + &t;
                        } else {
                            acc = &acc - &t;
                        }
                    }
                }
            }
            pos += 1;
        }
        minors[mask] = Some(acc);
    }
    minors[(1 << n) - 1].take().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactpoly::{int, rat};

    #[test]
    fn echelon_expresses_combinations() {
        let mut e: Echelon<usize> = Echelon::new();
        let v1: SparseVec<usize> = [(0, int(1)), (1, int(2))].into_iter().collect();
        let v2: SparseVec<usize> = [(1, int(1)), (2, int(3))].into_iter().collect();
        assert!(e.insert(&v1));
        assert!(e.insert(&v2));
        let w: SparseVec<usize> = [(0, int(2)), (1, int(1)), (2, int(-9))].into_iter().collect();
        assert_eq!(e.express(&w).unwrap(), vec![int(2), int(-3)]);
        assert!(!e.insert(&w));
        let u: SparseVec<usize> = [(2, int(1))].into_iter().collect();
        assert!(e.express(&u).is_none());
    }

    #[test]
    fn inverse_roundtrip() {
        let m = vec![vec![int(2), int(1)], vec![int(1), int(1)]];
        let inv = inverse(&m).unwrap();
        assert_eq!(inv, vec![vec![int(1), int(-1)], vec![int(-1), int(2)]]);
        assert!(inverse(&vec![vec![int(1), int(2)], vec![rat(1, 2), int(1)]]).is_none());
        assert_eq!(rank(&vec![vec![int(1), int(2)], vec![rat(1, 2), int(1)]]), 1);
    }

    #[test]
    fn polynomial_determinant() {
        let x = Polynomial::var(2, 0);
        let y = Polynomial::var(2, 1);
        let one = Polynomial::one(2);
        let zero = Polynomial::zero(2);
        // [[1, x, y], [0, 1, x], [0, 0, 1]] has determinant 1
        let m = vec![
            vec![one.clone(), x.clone(), y.clone()],
            vec![zero.clone(), one.clone(), x.clone()],
            vec![zero.clone(), zero.clone(), one.clone()],
        ];
        assert_eq!(poly_det(&m, 2), one);
        let m2 = vec![vec![x.clone(), y.clone()], vec![y.clone(), x.clone()]];
        assert_eq!(poly_det(&m2, 2), &(&x * &x) - &(&y * &y));
    }
}
