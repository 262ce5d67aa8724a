//! Exact lattice computations: dual bases, saturation, basis completion and
//! lattice points inside rational subspaces.
//!
//! A [`LatticeBasis`] stores its generators as rows of rational coordinates.
//! Sublattices are described by integer coordinates relative to the ambient
//! basis, so every question about them becomes a question about integer
//! matrices and is answered through the Smith normal form.

pub mod matrix;
pub mod snf;
pub mod subspace;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::rational::{serde_rat_matrix, Rat};
use matrix::{
    combine_rows, det, hermite_normal_form, int_det, int_identity, int_to_rat, int_vec_to_rat, inverse,
    primitive_integer, rank, rat_mul, rat_to_int, transpose, IntMatrix, RatMatrix,
};
pub use snf::{smith_normal_form, SmithForm};
pub use subspace::Subspace;

pub const MAX_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LatticeError {
    #[error("basis must have n rows of n entries; got {rows} rows, row {bad_row} has {len} entries")]
    NotSquare { rows: usize, bad_row: usize, len: usize },
    #[error("dimension {0} is outside the supported range 1..={MAX_DIM}")]
    Dimension(usize),
    #[error("basis is singular (determinant 0)")]
    Singular,
    #[error("vector has {got} coordinates, ambient dimension is {expected}")]
    Length { expected: usize, got: usize },
    #[error("generators are linearly dependent")]
    DependentGenerators,
    #[error(
        "sublattice is not saturated (ambient lattice meets its span in a superlattice of index {index}); \
         a basis of it cannot be completed to a basis of the ambient lattice"
    )]
    NotSaturated { index: BigInt },
    #[error("matrix is not unimodular")]
    NotUnimodular,
}

/// Full-rank lattice in Q^n; row `i` is the generator `e_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeBasis {
    rows: RatMatrix,
    det: Rat,
}

impl LatticeBasis {
    pub fn new(rows: RatMatrix) -> Result<Self, LatticeError> {
        let n = rows.len();
        if n == 0 || n > MAX_DIM {
            return Err(LatticeError::Dimension(n));
        }
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(LatticeError::NotSquare { rows: n, bad_row: i, len: row.len() });
        }
        let det = det(&rows);
        if det.is_zero() {
            return Err(LatticeError::Singular);
        }
        Ok(LatticeBasis { rows, det })
    }

    pub fn from_integers(rows: &[Vec<i64>]) -> Result<Self, LatticeError> {
        Self::new(rows.iter().map(|r| r.iter().map(|&x| Rat::from_integer(x.into())).collect()).collect())
    }

    pub fn identity(n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n), "dimension {n} out of range");
        LatticeBasis { rows: matrix::rat_identity(n), det: Rat::one() }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &RatMatrix {
        &self.rows
    }

    pub fn det(&self) -> &Rat {
        &self.det
    }

    /// Volume of a fundamental parallelepiped.
    pub fn volume(&self) -> Rat {
        self.det.abs()
    }

    pub fn is_standard(&self) -> bool {
        self.rows == matrix::rat_identity(self.dim())
    }

    /// The lattice point with the given integer coordinates.
    pub fn point(&self, coords: &[BigInt]) -> Vec<Rat> {
        combine_rows(&int_vec_to_rat(coords), &self.rows)
    }

    pub fn point_rational(&self, coords: &[Rat]) -> Vec<Rat> {
        combine_rows(coords, &self.rows)
    }

    /// Coordinates of `x` in this basis, when `x` lies in the lattice.
    pub fn coordinates(&self, x: &[Rat]) -> Option<Vec<BigInt>> {
        let coords = self.rational_coordinates(x);
        coords.iter().all(|c| c.is_integer()).then(|| coords.iter().map(|c| c.to_integer()).collect())
    }

    pub fn rational_coordinates(&self, x: &[Rat]) -> Vec<Rat> {
        // c B = x  <=>  c = x B^{-1}
        let inv = inverse(&self.rows).expect("basis is nonsingular");
        rat_mul(&vec![x.to_vec()], &inv).remove(0)
    }

    /// The basis with rows `transform * rows`.
    pub fn transformed(&self, transform: &IntMatrix) -> Result<Self, LatticeError> {
        Self::new(rat_mul(&int_to_rat(transform), &self.rows))
    }

    /// Whether `other` generates the same lattice (possibly with a different basis).
    pub fn same_lattice(&self, other: &Self) -> bool {
        let change = rat_mul(&other.rows, &inverse(&self.rows).expect("nonsingular"));
        rat_to_int(&change).is_some_and(|c| int_det(&c).abs().is_one())
    }
}

impl Serialize for LatticeBasis {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serde_rat_matrix::serialize(&self.rows, s)
    }
}

impl<'de> Deserialize<'de> for LatticeBasis {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = serde_rat_matrix::deserialize(d)?;
        LatticeBasis::new(rows).map_err(serde::de::Error::custom)
    }
}

/// Integer change of basis with its exact integer inverse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnimodularRecord {
    #[serde(with = "crate::rational::serde_int_matrix")]
    pub matrix: IntMatrix,
    #[serde(with = "crate::rational::serde_int_matrix")]
    pub inverse: IntMatrix,
}

impl UnimodularRecord {
    pub fn new(matrix: IntMatrix) -> Result<Self, LatticeError> {
        let inv = inverse(&int_to_rat(&matrix)).ok_or(LatticeError::NotUnimodular)?;
        let inverse = rat_to_int(&inv).ok_or(LatticeError::NotUnimodular)?;
        Ok(UnimodularRecord { matrix, inverse })
    }

    pub fn identity(n: usize) -> Self {
        UnimodularRecord { matrix: int_identity(n), inverse: int_identity(n) }
    }
}

/// Subgroup of an ambient lattice given by integer coordinates of its generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sublattice {
    ambient: LatticeBasis,
    generators: IntMatrix,
    saturated: bool,
}

impl Sublattice {
    pub fn new(ambient: LatticeBasis, generators: IntMatrix) -> Result<Self, LatticeError> {
        let n = ambient.dim();
        if let Some(g) = generators.iter().find(|g| g.len() != n) {
            return Err(LatticeError::Length { expected: n, got: g.len() });
        }
        if !generators.is_empty() && rank(&int_to_rat(&generators)) < generators.len() {
            return Err(LatticeError::DependentGenerators);
        }
        let saturated = saturation_index(&generators).is_one();
        Ok(Sublattice { ambient, generators, saturated })
    }

    pub fn trivial(ambient: LatticeBasis) -> Self {
        Sublattice { ambient, generators: Vec::new(), saturated: true }
    }

    pub fn ambient(&self) -> &LatticeBasis {
        &self.ambient
    }

    pub fn generators(&self) -> &IntMatrix {
        &self.generators
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    /// `ambient ∩ span(generators) == integer span of generators`.
    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    /// Generators as points of the ambient space.
    pub fn vectors(&self) -> RatMatrix {
        self.generators.iter().map(|g| self.ambient.point(g)).collect()
    }

    /// Index of the integer span of the generators inside its saturated hull.
    pub fn saturation_index(&self) -> BigInt {
        saturation_index(&self.generators)
    }

    /// Whether both generate the same subgroup of the same ambient lattice.
    pub fn same_span(&self, other: &Self) -> bool {
        self.ambient == other.ambient
            && hermite_normal_form(&self.generators) == hermite_normal_form(&other.generators)
    }
}

fn saturation_index(generators: &IntMatrix) -> BigInt {
    if generators.is_empty() {
        return BigInt::one();
    }
    smith_normal_form(generators).invariant_factors().iter().product()
}

/// Rows of the dual basis `xi_i` with `xi_i . e_j = delta_ij`: the inverse transpose.
pub fn dual_basis(basis: &LatticeBasis) -> LatticeBasis {
    let inv = inverse(&transpose(basis.rows())).expect("lattice basis is nonsingular");
    LatticeBasis::new(inv).expect("inverse of a nonsingular matrix is nonsingular")
}

/// Saturated hull `ambient ∩ span(generators)` of the same rank.
pub fn saturate(sub: &Sublattice) -> Sublattice {
    if sub.saturated {
        return sub.clone();
    }
    let k = sub.rank();
    let snf = smith_normal_form(&sub.generators);
    // generators = U D V, so the first k rows of V span the same Q-space and,
    // V being unimodular, exactly the lattice points in it.
    let hull = hermite_normal_form(&snf.v[..k].to_vec());
    Sublattice { ambient: sub.ambient.clone(), generators: hull, saturated: true }
}

/// Completes a basis of a saturated sublattice to a basis of the ambient lattice.
///
/// The first `rank` rows of the returned basis are the sublattice generators
/// verbatim; the record holds the integer change of basis from the ambient
/// basis and its inverse.
pub fn complete_basis(sub: &Sublattice) -> Result<(LatticeBasis, UnimodularRecord), LatticeError> {
    let n = sub.ambient.dim();
    let k = sub.rank();
    if k == 0 {
        return Ok((sub.ambient.clone(), UnimodularRecord::identity(n)));
    }
    let index = sub.saturation_index();
    if !index.is_one() {
        return Err(LatticeError::NotSaturated { index });
    }
    // G = U [I_k | 0] V: the projections of the last n-k rows of V form a basis
    // of the quotient lattice, so they complete G.
    let snf = smith_normal_form(&sub.generators);
    let tail = canonical_completion(snf.v[k..].to_vec(), &hermite_normal_form(&sub.generators));
    let mut change = sub.generators.clone();
    change.extend(tail);
    let record = UnimodularRecord::new(change)?;
    debug_assert!(int_det(&record.matrix).abs().is_one());
    let basis = sub.ambient.transformed(&record.matrix)?;
    Ok((basis, record))
}

/// Deterministic representative among the completions `tail + span(G)` up to
/// unimodular mixing: Hermite-reduce the tail, reduce modulo the sublattice's
/// Hermite basis and make every leading entry positive.
fn canonical_completion(tail: IntMatrix, sub_hnf: &IntMatrix) -> IntMatrix {
    let reduce = |rows: IntMatrix| -> IntMatrix {
        rows.into_iter()
            .map(|mut r| {
                for h in sub_hnf {
                    let p = h.iter().position(|x| !x.is_zero()).expect("hnf rows are nonzero");
                    let q = r[p].div_floor(&h[p]);
                    if !q.is_zero() {
                        for (x, y) in r.iter_mut().zip(h) {
                            *x -= &q * y;
                        }
                    }
                }
                r
            })
            .collect()
    };
    let mut rows = reduce(hermite_normal_form(&reduce(tail)));
    for _ in 0..8 {
        let mut changed = false;
        for r in rows.iter_mut() {
            if r.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
                r.iter_mut().for_each(|x| *x = -x.clone());
                changed = true;
            }
        }
        if !changed {
            break;
        }
        rows = reduce(rows);
    }
    rows
}

/// The sublattice `lat ∩ W` for the rational subspace `W` spanned by `spanning`.
pub fn lattice_points_in_subspace(lat: &LatticeBasis, spanning: &[Vec<Rat>]) -> Result<Sublattice, LatticeError> {
    let n = lat.dim();
    if let Some(v) = spanning.iter().find(|v| v.len() != n) {
        return Err(LatticeError::Length { expected: n, got: v.len() });
    }
    let w = Subspace::span(n, spanning);
    Ok(lattice_points_in(lat, &w))
}

pub fn lattice_points_in(lat: &LatticeBasis, w: &Subspace) -> Sublattice {
    let n = lat.dim();
    if w.is_zero() {
        return Sublattice::trivial(lat.clone());
    }
    // c B lies in W iff (c B) . nu = 0 for every nu in W^perp, i.e. c . (B nu) = 0.
    let constraints: RatMatrix = w
        .orthogonal_complement()
        .basis
        .iter()
        .map(|nu| lat.rows().iter().map(|row| matrix::vec_dot(row, nu)).collect())
        .collect();
    let coords = Subspace::solutions_of(n, &constraints);
    let generators: IntMatrix = coords.basis.iter().map(|v| primitive_integer(v)).collect();
    let sub = Sublattice::new(lat.clone(), generators).expect("rref rows are independent");
    let hull = saturate(&sub);
    Sublattice {
        ambient: lat.clone(),
        generators: hermite_normal_form(&hull.generators),
        saturated: true,
    }
}
