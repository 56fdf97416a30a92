//! The Lie algebra generated by a homogeneous field system.
//!
//! Homogeneous polynomial fields of positive degree generate a
//! finite-dimensional nilpotent algebra graded by degree. The basis is
//! built degree by degree: generators of degree `d` first, then brackets
//! `[X_g, W]` with `W` a basis element of degree `d − ν_g`, keeping those
//! that are linearly independent over the rationals.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactpoly::{format_rational, Monomial, Rational};
use crate::fields::{certify_homogeneity, HomogeneousSystem, PolyVectorField};
use crate::linalg::{rank, Echelon, SparseVec};

/// How a basis element was produced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// The generator with this index.
    Generator(usize),
    /// `[X_g, W_b]`: generator index and basis index.
    Bracket(usize, usize),
}

/// Sparse structure constants: `[W_i, W_j] = Σ_k c[i][j] (k, c_ij^k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants {
    dim: usize,
    table: Vec<Vec<Vec<(usize, Rational)>>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StructureConstantEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub c: String,
}

impl StructureConstants {
    pub fn new(dim: usize) -> Self {
        StructureConstants {
            dim,
            table: vec![vec![Vec::new(); dim]; dim],
        }
    }

    /// Build from a dense table `c[i][j][k]`.
    pub fn from_dense(c: &[Vec<Vec<Rational>>]) -> Self {
        let dim = c.len();
        let mut sc = StructureConstants::new(dim);
        for i in 0..dim {
            for j in 0..dim {
                sc.table[i][j] = c[i][j]
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| !v.is_zero())
                    .map(|(k, v)| (k, v.clone()))
                    .collect();
            }
        }
        sc
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Rational {
        self.table[i][j]
            .iter()
            .find(|(kk, _)| *kk == k)
            .map(|(_, c)| c.clone())
            .unwrap_or_else(Rational::zero)
    }

    pub fn bracket_terms(&self, i: usize, j: usize) -> &[(usize, Rational)] {
        &self.table[i][j]
    }

    pub fn is_abelian(&self) -> bool {
        self.table.iter().all(|r| r.iter().all(|c| c.is_empty()))
    }

    /// Nonzero entries with 1-based indices.
    pub fn entries(&self) -> Vec<StructureConstantEntry> {
        let mut out = Vec::new();
        for i in 0..self.dim {
            for j in 0..self.dim {
                for (k, c) in &self.table[i][j] {
                    out.push(StructureConstantEntry {
                        i: i + 1,
                        j: j + 1,
                        k: k + 1,
                        c: format_rational(c),
                    });
                }
            }
        }
        out
    }

    /// Bracket of coordinate vectors, exact.
    pub fn bracket(&self, a: &[Rational], b: &[Rational]) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.dim];
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                if bj.is_zero() {
                    continue;
                }
                let ab = ai * bj;
                for (k, c) in &self.table[i][j] {
                    out[*k] += &ab * c;
                }
            }
        }
        out
    }

    /// Antisymmetry and the Jacobi identity, exactly.
    pub fn check_jacobi(&self) -> bool {
        let n = self.dim;
        let unit = |i: usize| {
            let mut v = vec![Rational::zero(); n];
            v[i] = Rational::one();
            v
        };
        for i in 0..n {
            for j in 0..n {
                let ij = self.bracket(&unit(i), &unit(j));
                let ji = self.bracket(&unit(j), &unit(i));
                if ij.iter().zip(&ji).any(|(a, b)| !(a + b).is_zero()) {
                    return false;
                }
                for k in 0..n {
                    let a = self.bracket(&self.bracket(&unit(i), &unit(j)), &unit(k));
                    let b = self.bracket(&self.bracket(&unit(j), &unit(k)), &unit(i));
                    let c = self.bracket(&self.bracket(&unit(k), &unit(i)), &unit(j));
                    if (0..n).any(|t| !(&a[t] + &b[t] + &c[t]).is_zero()) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Graded basis of `Lie(X)` with its structure constants.
#[derive(Clone, Debug)]
pub struct LieAlgebra {
    basis: Vec<PolyVectorField>,
    degrees: Vec<u32>,
    generator_indices: Vec<usize>,
    provenance: Vec<Provenance>,
    structure: StructureConstants,
    sigma: Vec<u32>,
}

type Key = (usize, Monomial);

impl LieAlgebra {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[PolyVectorField] {
        &self.basis
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// Basis slot of each generator.
    pub fn generator_indices(&self) -> &[usize] {
        &self.generator_indices
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn structure_constants(&self) -> &StructureConstants {
        &self.structure
    }

    pub fn ambient_dim(&self) -> usize {
        self.sigma.len()
    }

    /// Nilpotency step from the lower central series.
    pub fn step(&self) -> usize {
        nilpotency_step(&self.structure)
    }

    /// `Σ c_k W_k` as a polynomial field.
    pub fn combination(&self, coords: &[Rational]) -> PolyVectorField {
        let n = self.ambient_dim();
        let mut f = PolyVectorField::zero(n);
        for (c, w) in coords.iter().zip(&self.basis) {
            if !c.is_zero() {
                f = f.add(&w.scale(c)).expect("same dimension");
            }
        }
        f
    }

    /// Recompute every bracket of basis fields and compare with the
    /// structure constants.
    pub fn verify_structure(&self) -> bool {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                let direct = self.basis[i].commutator(&self.basis[j]).expect("same dimension");
                let mut coords = vec![Rational::zero(); n];
                for (k, c) in self.structure.bracket_terms(i, j) {
                    coords[*k] = c.clone();
                }
                if direct != self.combination(&coords) {
                    return false;
                }
            }
        }
        true
    }

    /// Structure constants vanish unless degrees add up.
    pub fn verify_grading(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| {
            (0..n).all(|j| {
                self.structure
                    .bracket_terms(i, j)
                    .iter()
                    .all(|(k, _)| self.degrees[*k] == self.degrees[i] + self.degrees[j])
            })
        })
    }
}

fn sparse(f: &PolyVectorField) -> SparseVec<Key> {
    f.to_sparse()
}

/// Build the graded basis and structure constants of the Lie algebra
/// generated by the system's fields.
pub fn generate_lie_algebra(system: &HomogeneousSystem) -> Result<LieAlgebra> {
    let sigma = system.dilation().sigma().to_vec();
    let max_deg = *sigma.iter().max().unwrap_or(&0);
    let gens = system.fields();
    let gdeg = system.degrees();
    let mut echelon: Echelon<Key> = Echelon::new();
    let mut basis: Vec<PolyVectorField> = Vec::new();
    let mut degrees: Vec<u32> = Vec::new();
    let mut provenance = Vec::new();
    let mut generator_indices = vec![usize::MAX; gens.len()];
    for d in 1..=max_deg {
        for (g, f) in gens.iter().enumerate() {
            if gdeg[g] != d {
                continue;
            }
            if f.is_zero() || !echelon.insert(&sparse(f)) {
                return Err(Error::LieAlgebra(format!(
                    "generator {} is linearly dependent on the previous basis elements",
                    system.names()[g]
                )));
            }
            generator_indices[g] = basis.len();
            basis.push(f.clone());
            degrees.push(d);
            provenance.push(Provenance::Generator(g));
        }
        for (g, f) in gens.iter().enumerate() {
            if gdeg[g] >= d {
                continue;
            }
            let lower: Vec<usize> = (0..basis.len()).filter(|&b| degrees[b] == d - gdeg[g]).collect();
            for b in lower {
                let br = f.commutator(&basis[b])?;
                if br.is_zero() {
                    continue;
                }
                if certify_homogeneity(&br, system.dilation()) != Some(d) {
                    return Err(Error::LieAlgebra(format!(
                        "bracket [{}, W{}] is not homogeneous of degree {}",
                        system.names()[g],
                        b + 1,
                        d
                    )));
                }
                if echelon.insert(&sparse(&br)) {
                    basis.push(br);
                    degrees.push(d);
                    provenance.push(Provenance::Bracket(g, b));
                }
            }
        }
    }
    // Nothing of degree above max σ can be nonzero; confirm closure.
    let n = basis.len();
    let mut dense = vec![vec![vec![Rational::zero(); n]; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let br = basis[i].commutator(&basis[j])?;
            if br.is_zero() {
                continue;
            }
            let coords = echelon.express(&sparse(&br)).ok_or_else(|| {
                Error::LieAlgebra(format!("[W{}, W{}] is outside the computed span", i + 1, j + 1))
            })?;
            for (k, c) in coords.into_iter().enumerate() {
                if !c.is_zero() {
                    dense[j][i][k] = -c.clone();
                    dense[i][j][k] = c;
                }
            }
        }
    }
    let structure = StructureConstants::from_dense(&dense);
    let alg = LieAlgebra {
        basis,
        degrees,
        generator_indices,
        provenance,
        structure,
        sigma,
    };
    if !alg.verify_grading() {
        return Err(Error::LieAlgebra("structure constants violate the grading".into()));
    }
    Ok(alg)
}

/// Rank of the fields evaluated at a rational point.
pub fn hormander_rank(fields: &[PolyVectorField], point: &[Rational]) -> Result<usize> {
    let m: Vec<Vec<Rational>> = fields
        .iter()
        .map(|f| f.coeffs().iter().map(|c| c.eval(point)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    Ok(rank(&m))
}

pub fn homogeneous_dimension(sigma: &[u32]) -> u32 {
    sigma.iter().sum()
}

/// Smallest `r` such that every `(r+1)`-fold bracket vanishes.
pub fn nilpotency_step(sc: &StructureConstants) -> usize {
    let n = sc.dim();
    if n == 0 {
        return 0;
    }
    let unit = |i: usize| {
        let mut v = vec![Rational::zero(); n];
        v[i] = Rational::one();
        v
    };
    // spanning vectors of the current term of the lower central series
    let mut current: Vec<Vec<Rational>> = (0..n).map(unit).collect();
    let mut step = 0;
    loop {
        if current.is_empty() {
            return step;
        }
        step += 1;
        let mut ech: Echelon<usize> = Echelon::new();
        let mut next = Vec::new();
        for i in 0..n {
            for v in &current {
                let b = sc.bracket(&unit(i), v);
                let sv: SparseVec<usize> = b
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(k, c)| (k, c.clone()))
                    .collect();
                if ech.insert(&sv) {
                    next.push(b);
                }
            }
        }
        current = next;
        if step > n + 1 {
            return step;
        }
    }
}

/// Coordinates of every basis element in the monomial support, keyed for
/// reports.
pub fn basis_table(alg: &LieAlgebra) -> BTreeMap<usize, String> {
    alg.basis()
        .iter()
        .enumerate()
        .map(|(i, f)| (i + 1, f.to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactpoly::{int, Polynomial};
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
    fn grushin_algebra() {
        let alg = generate_lie_algebra(&grushin()).unwrap();
        assert_eq!(alg.dim(), 3);
        assert_eq!(alg.degrees(), &[1, 1, 2]);
        assert_eq!(alg.basis()[2], PolyVectorField::coordinate(2, 1));
        let entries = alg.structure_constants().entries();
        assert_eq!(entries.len(), 2);
        assert_eq!(alg.structure_constants().get(0, 1, 2), int(1));
        assert_eq!(alg.structure_constants().get(1, 0, 2), int(-1));
        assert_eq!(alg.step(), 2);
        assert!(alg.verify_structure());
        assert!(alg.structure_constants().check_jacobi());
    }

    #[test]
    fn rank_at_origin() {
        let sys = grushin();
        let alg = generate_lie_algebra(&sys).unwrap();
        let origin = vec![int(0), int(0)];
        assert_eq!(hormander_rank(alg.basis(), &origin).unwrap(), 2);
        assert_eq!(hormander_rank(sys.fields(), &origin).unwrap(), 1);
    }

    #[test]
    fn single_coordinate_field() {
        let sys = HomogeneousSystem::with_default_names(
            DilationFamily::new(vec![1]).unwrap(),
            vec![PolyVectorField::coordinate(1, 0)],
        )
        .unwrap();
        let alg = generate_lie_algebra(&sys).unwrap();
        assert_eq!(alg.dim(), 1);
        assert!(alg.structure_constants().is_abelian());
        assert_eq!(alg.step(), 1);
    }

    #[test]
    fn dimensions() {
        assert_eq!(homogeneous_dimension(&[1, 2]), 3);
        assert_eq!(homogeneous_dimension(&[1, 2, 3, 4, 5]), 15);
    }
}
