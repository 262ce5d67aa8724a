//! Exact problem data: piecewise-polynomial flux, diffusion and entropies,
//! with the symbolic calculus (primitives and the entropy-flux transform
//! `T_g`) used by the condition checker and the diagnostics.

mod locus;
mod piecewise;
mod poly;
mod specs;
mod sqrt_primitive;

use num_traits::Zero;

use crate::rational::{format_rat, Rat};

pub use locus::{adjacent_pieces, affine_locus, degenerate_locus, direction_vicinity, AffineLocus};
pub use piecewise::{CompiledPoly, PiecewisePoly};
pub use poly::{horner, max_abs_on, real_roots_in, u, Poly};
pub use specs::{is_psd, DiffusionSpec, EntropySpec, FluxSpec, PiecewiseField, ProblemSpec, RawProblemSpec, SpecError};
pub use sqrt_primitive::{gauss_legendre, SqrtPrimitive};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("a piecewise polynomial needs m+1 breakpoints for m >= 1 pieces (got {breakpoints} breakpoints, {pieces} pieces)")]
    PieceCount { breakpoints: usize, pieces: usize },
    #[error("breakpoints must be strictly increasing")]
    UnsortedBreakpoints,
    #[error("interval [{}, {}] is not inside the domain", format_rat(.lo), format_rat(.hi))]
    OutsideDomain { lo: Rat, hi: Rat },
    #[error("anchor {} lies outside the domain", format_rat(.0))]
    AnchorOutside(Rat),
    #[error("piecewise polynomials are defined on different domains")]
    DomainMismatch,
    #[error("weight g is undefined (unbounded) on part of the working interval")]
    WeightUndefined,
    #[error("{what} does not cover the working interval [-M, M] with M = {}", format_rat(.m))]
    DoesNotCover { what: String, m: Rat },
    #[error("flux component {0} is not continuous")]
    DiscontinuousFlux(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("diffusion matrix is not symmetric at entry ({0}, {1})")]
    Asymmetric(usize, usize),
    #[error("diffusion matrix is not positive semidefinite at u = {}", format_rat(.0))]
    NotPsd(Rat),
    #[error("no positive-semidefiniteness certificate near u = {}", format_rat(.0))]
    MissingCertificate(Rat),
    #[error("entropy is not convex: its derivative decreases near u = {}", format_rat(.0))]
    NotConvex(Rat),
    #[error("state bound M must be positive")]
    NonPositiveBound,
    #[error("value {} is outside the working interval", format_rat(.0))]
    OutsideWorkingInterval(Rat),
    #[error("operation requires a diagonal diffusion matrix")]
    NotDiagonal,
}

/// Continuous primitive of `p` vanishing at `anchor`.
pub fn primitive(p: &PiecewisePoly, anchor: &Rat) -> Result<PiecewisePoly, ModelError> {
    if anchor < p.lo() || anchor > p.hi() {
        return Err(ModelError::AnchorOutside(anchor.clone()));
    }
    let bps = p.breakpoints();
    let mut pieces = Vec::with_capacity(p.pieces().len());
    let mut carry = Rat::zero();
    for (j, piece) in p.pieces().iter().enumerate() {
        let anti = piece.antiderivative();
        // continue from the value reached at the left breakpoint
        let offset = &carry - anti.eval(&bps[j]);
        let shifted = &anti + &Poly::constant(offset);
        carry = shifted.eval(&bps[j + 1]);
        pieces.push(shifted);
    }
    let raw = PiecewisePoly::new(bps.to_vec(), pieces)?;
    let at_anchor = raw.eval(anchor).expect("anchor inside domain");
    Ok(raw.map(|q| q - &Poly::constant(at_anchor.clone())))
}

/// `T_g(f)(u) = ∫_0^u g(v) f'(v) dv` as an exact continuous piecewise polynomial.
///
/// `g` may jump at its breakpoints; the result stays continuous. It is
/// anchored to vanish at 0, or at the left end of `f`'s domain when 0 lies
/// outside it.
pub fn apply_tg(g: &PiecewisePoly, f: &PiecewisePoly) -> Result<PiecewisePoly, ModelError> {
    if !g.covers(f.lo(), f.hi()) {
        return Err(ModelError::WeightUndefined);
    }
    let g = g.restrict(f.lo(), f.hi())?;
    let integrand = g.mul(&f.derivative())?;
    let zero = Rat::zero();
    let anchor = if f.lo() <= &zero && &zero <= f.hi() { zero } else { f.lo().clone() };
    primitive(&integrand, &anchor)
}
