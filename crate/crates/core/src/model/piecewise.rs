//! Piecewise polynomials with rational breakpoints.

use num_traits::One;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::poly::{horner, u, Poly};
use super::ModelError;
use crate::rational::{serde_rat_matrix, serde_rat_vec, to_f64, Rat};

/// Piece `j` is valid on `[b_j, b_{j+1}]`. Point evaluation at an interior
/// breakpoint uses the piece to its right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewisePoly {
    breakpoints: Vec<Rat>,
    pieces: Vec<Poly>,
    continuous: bool,
}

impl PiecewisePoly {
    pub fn new(breakpoints: Vec<Rat>, pieces: Vec<Poly>) -> Result<Self, ModelError> {
        if breakpoints.len() < 2 || breakpoints.len() != pieces.len() + 1 {
            return Err(ModelError::PieceCount { breakpoints: breakpoints.len(), pieces: pieces.len() });
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ModelError::UnsortedBreakpoints);
        }
        let continuous = (1..pieces.len())
            .all(|j| pieces[j - 1].eval(&breakpoints[j]) == pieces[j].eval(&breakpoints[j]));
        Ok(PiecewisePoly { breakpoints, pieces, continuous })
    }

    pub fn polynomial(lo: Rat, hi: Rat, p: Poly) -> Result<Self, ModelError> {
        Self::new(vec![lo, hi], vec![p])
    }

    pub fn constant(lo: Rat, hi: Rat, c: Rat) -> Result<Self, ModelError> {
        Self::polynomial(lo, hi, Poly::constant(c))
    }

    /// `left` on `[lo, k)`, `right` on `[k, hi]`.
    pub fn step(lo: Rat, hi: Rat, k: Rat, left: Rat, right: Rat) -> Result<Self, ModelError> {
        if !(lo < k && k < hi) {
            return Self::constant(lo.clone(), hi, if k <= lo { right } else { left });
        }
        Self::new(vec![lo, k, hi], vec![Poly::constant(left), Poly::constant(right)])
    }

    /// `sgn(u - k)` (with value +1 at `k`).
    pub fn sign(lo: Rat, hi: Rat, k: Rat) -> Result<Self, ModelError> {
        Self::step(lo, hi, k, -Rat::one(), Rat::one())
    }

    /// `|u - k|`
    pub fn abs_shift(lo: Rat, hi: Rat, k: Rat) -> Result<Self, ModelError> {
        let left = Poly::linear(-Rat::one(), k.clone());
        let right = Poly::linear(Rat::one(), -k.clone());
        if k <= lo {
            return Self::polynomial(lo, hi, right);
        }
        if k >= hi {
            return Self::polynomial(lo, hi, left);
        }
        Self::new(vec![lo, k, hi], vec![left, right])
    }

    pub fn breakpoints(&self) -> &[Rat] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Poly] {
        &self.pieces
    }

    pub fn is_continuous(&self) -> bool {
        self.continuous
    }

    pub fn lo(&self) -> &Rat {
        &self.breakpoints[0]
    }

    pub fn hi(&self) -> &Rat {
        self.breakpoints.last().expect("at least two breakpoints")
    }

    pub fn covers(&self, lo: &Rat, hi: &Rat) -> bool {
        self.lo() <= lo && hi <= self.hi()
    }

    pub fn max_degree(&self) -> usize {
        self.pieces.iter().filter_map(Poly::degree).max().unwrap_or(0)
    }

    pub fn piece_index(&self, x: &Rat) -> Option<usize> {
        if x < self.lo() || x > self.hi() {
            return None;
        }
        let m = self.pieces.len();
        // first breakpoint strictly greater than x, minus one
        let j = self.breakpoints.partition_point(|b| b <= x);
        Some((j.max(1) - 1).min(m - 1))
    }

    pub fn eval(&self, x: &Rat) -> Option<Rat> {
        self.piece_index(x).map(|j| self.pieces[j].eval(x))
    }

    /// One-sided limits `(f(x-), f(x+))`, clamped to the domain ends.
    pub fn one_sided(&self, x: &Rat) -> Option<(Rat, Rat)> {
        let j = self.piece_index(x)?;
        let right = self.pieces[j].eval(x);
        let left = if j > 0 && &self.breakpoints[j] == x {
            self.pieces[j - 1].eval(x)
        } else {
            right.clone()
        };
        Some((left, right))
    }

    /// Same function on the finer breakpoint set `self.breakpoints ∪ extra`
    /// (restricted to the domain).
    pub fn refine(&self, extra: &[Rat]) -> Self {
        let mut bps: Vec<Rat> = self
            .breakpoints
            .iter()
            .chain(extra.iter().filter(|x| *x > self.lo() && *x < self.hi()))
            .cloned()
            .collect();
        bps.sort();
        bps.dedup();
        let pieces = bps
            .windows(2)
            .map(|w| {
                let mid = (&w[0] + &w[1]) / Rat::from_integer(2.into());
                self.pieces[self.piece_index(&mid).expect("inside domain")].clone()
            })
            .collect();
        PiecewisePoly { breakpoints: bps, pieces, continuous: self.continuous }
    }

    /// Restriction to `[lo, hi]` (must lie inside the domain).
    pub fn restrict(&self, lo: &Rat, hi: &Rat) -> Result<Self, ModelError> {
        if !self.covers(lo, hi) || lo >= hi {
            return Err(ModelError::OutsideDomain { lo: lo.clone(), hi: hi.clone() });
        }
        let r = self.refine(&[lo.clone(), hi.clone()]);
        let start = r.breakpoints.iter().position(|b| b == lo).expect("refined");
        let end = r.breakpoints.iter().position(|b| b == hi).expect("refined");
        PiecewisePoly::new(r.breakpoints[start..=end].to_vec(), r.pieces[start..end].to_vec())
    }

    /// Merges adjacent pieces carrying the same polynomial.
    pub fn simplified(&self) -> Self {
        let mut bps = vec![self.breakpoints[0].clone()];
        let mut pieces: Vec<Poly> = Vec::new();
        for (j, p) in self.pieces.iter().enumerate() {
            if pieces.last() == Some(p) {
                *bps.last_mut().unwrap() = self.breakpoints[j + 1].clone();
            } else {
                pieces.push(p.clone());
                bps.push(self.breakpoints[j + 1].clone());
            }
        }
        PiecewisePoly { breakpoints: bps, pieces, continuous: self.continuous }
    }

    /// Pointwise combination on the common refinement of both domains' breakpoints.
    /// The domains must agree.
    pub fn zip_with(&self, other: &Self, f: impl Fn(&Poly, &Poly) -> Poly) -> Result<Self, ModelError> {
        if self.lo() != other.lo() || self.hi() != other.hi() {
            return Err(ModelError::DomainMismatch);
        }
        let a = self.refine(&other.breakpoints);
        let b = other.refine(&self.breakpoints);
        let pieces = a.pieces.iter().zip(&b.pieces).map(|(p, q)| f(p, q)).collect();
        PiecewisePoly::new(a.breakpoints, pieces)
    }

    pub fn map(&self, f: impl Fn(&Poly) -> Poly) -> Self {
        PiecewisePoly::new(self.breakpoints.clone(), self.pieces.iter().map(f).collect())
            .expect("same breakpoints")
    }

    pub fn add(&self, other: &Self) -> Result<Self, ModelError> {
        self.zip_with(other, |p, q| p + q)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, ModelError> {
        self.zip_with(other, |p, q| p - q)
    }

    pub fn mul(&self, other: &Self) -> Result<Self, ModelError> {
        self.zip_with(other, |p, q| p * q)
    }

    pub fn scale(&self, c: &Rat) -> Self {
        self.map(|p| p.scale(c))
    }

    /// Adds `slope * u + offset`.
    pub fn add_affine(&self, slope: &Rat, offset: &Rat) -> Self {
        let l = Poly::linear(slope.clone(), offset.clone());
        self.map(|p| p + &l)
    }

    /// Piecewise derivative; may jump at breakpoints.
    pub fn derivative(&self) -> Self {
        self.map(Poly::derivative)
    }

    /// Whether `self - other` is constant on the common domain and continuous.
    pub fn differs_by_constant(&self, other: &Self) -> bool {
        match self.sub(other) {
            Ok(d) => d.is_continuous() && d.pieces.iter().all(Poly::is_constant),
            Err(_) => false,
        }
    }

    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly {
            breakpoints: self.breakpoints.iter().map(to_f64).collect(),
            pieces: self.pieces.iter().map(Poly::to_f64_coeffs).collect(),
        }
    }

    pub fn identity(lo: Rat, hi: Rat) -> Result<Self, ModelError> {
        Self::polynomial(lo, hi, u())
    }

    pub fn is_nondecreasing_on_samples(&self, samples: &[Rat]) -> bool {
        let mut prev: Option<Rat> = None;
        for x in samples {
            let Some((l, r)) = self.one_sided(x) else { continue };
            for v in [l, r] {
                if prev.as_ref().is_some_and(|p| &v < p) {
                    return false;
                }
                prev = Some(v);
            }
        }
        true
    }

}

/// `f64` evaluation form of a [`PiecewisePoly`] for the solver's inner loops.
/// Arguments outside the domain extrapolate the end pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledPoly {
    pub breakpoints: Vec<f64>,
    pub pieces: Vec<Vec<f64>>,
}

impl CompiledPoly {
    #[inline]
    pub fn piece_index(&self, x: f64) -> usize {
        let m = self.pieces.len();
        if m == 1 {
            return 0;
        }
        let j = self.breakpoints[1..m].partition_point(|&b| b <= x);
        j.min(m - 1)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        horner(&self.pieces[self.piece_index(x)], x)
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|p| p.iter().all(|&c| c == 0.0))
    }
}

/// JSON object `{ "breakpoints": [...], "coeffs": [[c0, c1, ...], ...] }`.
#[derive(Serialize, Deserialize)]
struct PiecewiseJson {
    #[serde(with = "serde_rat_vec")]
    breakpoints: Vec<Rat>,
    #[serde(with = "serde_rat_matrix")]
    coeffs: Vec<Vec<Rat>>,
}

impl Serialize for PiecewisePoly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PiecewiseJson {
            breakpoints: self.breakpoints.clone(),
            coeffs: self.pieces.iter().map(|p| p.coeffs().to_vec()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PiecewisePoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = PiecewiseJson::deserialize(d)?;
        PiecewisePoly::new(raw.breakpoints, raw.coeffs.into_iter().map(Poly::new).collect())
            .map_err(serde::de::Error::custom)
    }
}
