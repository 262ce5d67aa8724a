//! Rational linear subspaces of Q^n kept in canonical (RREF) form.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::matrix::{nullspace, rref, vec_dot, RatMatrix};
use crate::rational::{serde_rat_matrix, Rat};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subspace {
    pub ambient_dim: usize,
    /// Reduced row echelon basis; equal subspaces have equal bases.
    #[serde(with = "serde_rat_matrix")]
    pub basis: RatMatrix,
}

impl Subspace {
    pub fn span(ambient_dim: usize, vectors: &[Vec<Rat>]) -> Self {
        let nonzero: RatMatrix = vectors.iter().filter(|v| v.iter().any(|x| !x.is_zero())).cloned().collect();
        let basis = if nonzero.is_empty() { Vec::new() } else { rref(&nonzero).0 };
        Subspace { ambient_dim, basis }
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Subspace { ambient_dim, basis: Vec::new() }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self::span(ambient_dim, &super::matrix::rat_identity(ambient_dim))
    }

    /// `{x : c . x = 0 for every constraint row c}`.
    pub fn solutions_of(ambient_dim: usize, constraints: &[Vec<Rat>]) -> Self {
        if constraints.is_empty() {
            return Self::full(ambient_dim);
        }
        Self::span(ambient_dim, &nullspace(&constraints.to_vec(), ambient_dim))
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn orthogonal_complement(&self) -> Self {
        Self::solutions_of(self.ambient_dim, &self.basis)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut constraints = self.orthogonal_complement().basis;
        constraints.extend(other.orthogonal_complement().basis);
        Self::solutions_of(self.ambient_dim, &constraints)
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        self.orthogonal_complement().basis.iter().all(|c| vec_dot(c, v).is_zero())
    }
}
