//! The subspaces of directions along which the flux is affine, or the
//! diffusion degenerate, on a neighbourhood of a state value.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::piecewise::PiecewisePoly;
use super::poly::Poly;
use super::specs::{DiffusionSpec, FluxSpec};
use super::ModelError;
use crate::lattice::matrix::{combine_rows, inverse, vec_dot};
use crate::lattice::subspace::Subspace;
use crate::rational::{serde_rat_vec, Rat};

/// Pieces whose closure contains `x`: one piece in the interior or at the
/// domain ends, both neighbours at an interior breakpoint.
pub fn adjacent_pieces(breakpoints: &[Rat], x: &Rat) -> Vec<usize> {
    let m = breakpoints.len().saturating_sub(1);
    if m == 0 || x < &breakpoints[0] || x > &breakpoints[m] {
        return Vec::new();
    }
    let j = breakpoints.partition_point(|b| b <= x);
    if j == 0 {
        return vec![0];
    }
    if j > m {
        return vec![m - 1];
    }
    if &breakpoints[j - 1] == x && j > 1 {
        vec![j - 2, j - 1]
    } else {
        vec![j - 1]
    }
}

/// `W` together with the common interval around `I` on which every `xi` in
/// `W` makes `xi . phi` affine, and the vector `c̄ ∈ W` with
/// `xi . phi(u) = (c̄ . xi) u + const` there.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineLocus {
    pub subspace: Subspace,
    #[serde(with = "serde_rat_vec")]
    pub vicinity: Vec<Rat>,
    /// Zero when `W = {0}`.
    #[serde(with = "serde_rat_vec")]
    pub velocity: Vec<Rat>,
}

fn check_inside(bound: &Rat, i: &Rat) -> Result<(), ModelError> {
    if i < &-bound.clone() || i > bound {
        return Err(ModelError::OutsideWorkingInterval(i.clone()));
    }
    Ok(())
}

/// Grows the block of pieces `adj` outward while `ok(piece)` holds and
/// returns the covered interval.
fn grow(bps: &[Rat], adj: &[usize], ok: impl Fn(usize) -> bool) -> (Rat, Rat) {
    let mut lo = adj[0];
    let mut hi = *adj.last().unwrap();
    while lo > 0 && ok(lo - 1) {
        lo -= 1;
    }
    while hi + 2 < bps.len() && ok(hi + 1) {
        hi += 1;
    }
    (bps[lo].clone(), bps[hi + 1].clone())
}

pub fn affine_locus(flux: &FluxSpec, i: &Rat) -> Result<AffineLocus, ModelError> {
    check_inside(flux.bound(), i)?;
    let n = flux.n();
    let comps = flux.refined();
    let bps = comps[0].breakpoints().to_vec();
    let adj = adjacent_pieces(&bps, i);
    let degree = comps.iter().map(|c| c.max_degree()).max().unwrap_or(0);

    let mut constraints: Vec<Vec<Rat>> = Vec::new();
    for &j in &adj {
        for d in 2..=degree {
            constraints.push(comps.iter().map(|c| c.pieces()[j].coeff(d)).collect());
        }
    }
    if let [l, r] = adj[..] {
        for d in 0..2 {
            constraints.push(comps.iter().map(|c| c.pieces()[l].coeff(d) - c.pieces()[r].coeff(d)).collect());
        }
    }
    let subspace = Subspace::solutions_of(n, &constraints);

    let along = |w: &[Rat], j: usize| -> Poly {
        comps.iter().zip(w).fold(Poly::zero(), |acc, (c, x)| &acc + &c.pieces()[j].scale(x))
    };
    let base: Vec<Poly> = subspace.basis.iter().map(|w| along(w, adj[0])).collect();
    let (lo, hi) = grow(&bps, &adj, |j| subspace.basis.iter().zip(&base).all(|(w, b)| &along(w, j) == b));

    // c̄ = sum lambda_k w_k with (c̄ . w_j) = slope_j: solve the Gram system.
    let velocity = if subspace.is_zero() {
        vec![Rat::zero(); n]
    } else {
        let gram: Vec<Vec<Rat>> = subspace
            .basis
            .iter()
            .map(|a| subspace.basis.iter().map(|b| vec_dot(a, b)).collect())
            .collect();
        let g_inv = inverse(&gram).expect("basis vectors are independent");
        let slopes: Vec<Rat> = base.iter().map(|p| p.coeff(1)).collect();
        let lambda: Vec<Rat> = g_inv.iter().map(|row| vec_dot(row, &slopes)).collect();
        combine_rows(&lambda, &subspace.basis)
    };
    Ok(AffineLocus { subspace, vicinity: vec![lo, hi], velocity })
}

/// `Z`: joint kernel of every coefficient matrix of `a(u)` on the pieces adjacent to `I`.
pub fn degenerate_locus(diff: &DiffusionSpec, i: &Rat) -> Result<Subspace, ModelError> {
    check_inside(diff.bound(), i)?;
    let n = diff.n();
    let entries = diff.refined();
    let bps = entries[0][0].breakpoints().to_vec();
    let adj = adjacent_pieces(&bps, i);
    for &j in &adj {
        let (lo, hi) = (&bps[j], &bps[j + 1]);
        if !diff.psd_certificate().iter().any(|s| s >= lo && s <= hi) {
            return Err(ModelError::MissingCertificate(i.clone()));
        }
    }
    let degree = entries.iter().flatten().map(|e| e.max_degree()).max().unwrap_or(0);
    let mut constraints: Vec<Vec<Rat>> = Vec::new();
    for &j in &adj {
        for d in 0..=degree {
            for row in &entries {
                constraints.push(row.iter().map(|e| e.pieces()[j].coeff(d)).collect());
            }
        }
    }
    Ok(Subspace::solutions_of(n, &constraints))
}

/// Largest interval around `I` on which `xi . phi` is one affine function and
/// `a(u) xi = 0`, or `None` when either fails on every neighbourhood of `I`.
pub fn direction_vicinity(flux: &FluxSpec, diff: &DiffusionSpec, xi: &[Rat], i: &Rat) -> Option<(Rat, Rat)> {
    if check_inside(flux.bound(), i).is_err() {
        return None;
    }
    let f = flux.dot(xi);
    let n = diff.n();
    let zero = PiecewisePoly::constant(flux.bound() * Rat::from_integer((-1).into()), flux.bound().clone(), Rat::zero()).ok()?;
    let a_xi: Vec<PiecewisePoly> = (0..n)
        .map(|k| {
            (0..n).fold(zero.clone(), |acc, l| acc.add(&diff.entry(k, l).scale(&xi[l])).expect("same working interval"))
        })
        .collect();
    let mut all: Vec<Rat> = f.breakpoints().to_vec();
    for q in &a_xi {
        all.extend(q.breakpoints().iter().cloned());
    }
    let f = f.refine(&all);
    let a_xi: Vec<PiecewisePoly> = a_xi.iter().map(|q| q.refine(&all)).collect();
    let bps = f.breakpoints().to_vec();
    let adj = adjacent_pieces(&bps, i);
    let target = f.pieces()[adj[0]].clone();
    let ok = |j: usize| f.pieces()[j] == target && a_xi.iter().all(|q| q.pieces()[j].is_zero());
    if !target.is_affine() || !adj.iter().all(|&j| ok(j)) {
        return None;
    }
    Some(grow(&bps, &adj, ok))
}
