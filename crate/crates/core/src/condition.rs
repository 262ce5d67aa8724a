//! The nonlinearity-diffusivity condition: exact decision at a mean value
//! `I`, the stricter variant over the whole state range, the change of
//! variables that normalizes a problem, and the travelling wave that shows
//! decay fails when the condition does.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::lattice::matrix::{
    int_det, int_to_rat, inverse, rat_mul, rat_to_int, transpose, vec_dot, IntMatrix, RatMatrix,
};
use crate::lattice::subspace::Subspace;
use crate::lattice::{complete_basis, dual_basis, lattice_points_in, LatticeBasis, LatticeError, Sublattice};
use crate::model::{
    adjacent_pieces, affine_locus, degenerate_locus, direction_vicinity, DiffusionSpec, FluxSpec, ModelError,
    PiecewisePoly, Poly, ProblemSpec,
};
use crate::rational::{
    format_rat, rat, serde_int_matrix, serde_opt_int_vec, serde_opt_rat, serde_opt_rat_vec, serde_rat,
    serde_rat_matrix, serde_rat_vec, to_f64, Rat,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConditionError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("dimension mismatch: flux {flux}, diffusion {diffusion}, lattice {lattice}")]
    Dimension { flux: usize, diffusion: usize, lattice: usize },
    #[error("the condition holds, so there is no counterexample")]
    ConditionHolds,
    #[error("amplitude {} must be positive", format_rat(.0))]
    NonPositiveDelta(Rat),
    #[error("amplitude {} exceeds {}, the distance from I to the edge of the violating vicinity", format_rat(.delta), format_rat(.max))]
    DeltaTooLarge { delta: Rat, max: Rat },
}

fn check_dims(flux: &FluxSpec, diff: &DiffusionSpec, lat: &LatticeBasis) -> Result<(), ConditionError> {
    if flux.n() != diff.n() || flux.n() != lat.dim() {
        return Err(ConditionError::Dimension { flux: flux.n(), diffusion: diff.n(), lattice: lat.dim() });
    }
    Ok(())
}

/// Shortest generator by Euclidean norm, ties broken lexicographically.
fn shortest(sub: &Sublattice) -> Option<(Vec<Rat>, Vec<BigInt>)> {
    sub.vectors()
        .into_iter()
        .zip(sub.generators().iter().cloned())
        .min_by(|(a, _), (b, _)| vec_dot(a, a).cmp(&vec_dot(b, b)).then_with(|| a.cmp(b)))
}

/// Verdict of the condition at `I`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub holds: bool,
    #[serde(rename = "I", with = "serde_rat")]
    pub i: Rat,
    /// Violating dual-lattice vector.
    #[serde(with = "serde_opt_rat_vec")]
    pub witness: Option<Vec<Rat>>,
    /// The witness in integer coordinates of the dual basis.
    #[serde(with = "serde_opt_int_vec")]
    pub witness_coords: Option<Vec<BigInt>>,
    /// `[alpha, beta]` around `I` where the witness direction is affine and degenerate.
    #[serde(with = "serde_opt_rat_vec")]
    pub vicinity: Option<Vec<Rat>>,
    /// `c` with `xi . phi(u) = c u + const` on the vicinity.
    #[serde(with = "serde_opt_rat")]
    pub speed: Option<Rat>,
    pub affine_subspace: Subspace,
    pub degenerate_subspace: Subspace,
    /// Generators of `L' ∩ W ∩ Z` in dual-basis coordinates.
    #[serde(with = "serde_int_matrix")]
    pub violating_sublattice: IntMatrix,
    pub lattice: LatticeBasis,
}

pub fn check_condition(
    flux: &FluxSpec,
    diff: &DiffusionSpec,
    lat: &LatticeBasis,
    i: &Rat,
) -> Result<ConditionReport, ConditionError> {
    check_dims(flux, diff, lat)?;
    let loc = affine_locus(flux, i)?;
    let z = degenerate_locus(diff, i)?;
    let wz = loc.subspace.intersect(&z);
    let sub = lattice_points_in(&dual_basis(lat), &wz);
    let mut report = ConditionReport {
        holds: sub.rank() == 0,
        i: i.clone(),
        witness: None,
        witness_coords: None,
        vicinity: None,
        speed: None,
        affine_subspace: loc.subspace.clone(),
        degenerate_subspace: z,
        violating_sublattice: sub.generators().clone(),
        lattice: lat.clone(),
    };
    if let Some((xi, coords)) = shortest(&sub) {
        let (lo, hi) = direction_vicinity(flux, diff, &xi, i).expect("witness lies in W ∩ Z");
        report.speed = Some(vec_dot(&loc.velocity, &xi));
        report.vicinity = Some(vec![lo, hi]);
        report.witness = Some(xi);
        report.witness_coords = Some(coords);
    }
    Ok(report)
}

pub fn check_problem(spec: &ProblemSpec, i: &Rat) -> Result<ConditionReport, ConditionError> {
    check_condition(&spec.flux, &spec.diffusion, &spec.lattice, i)
}

/// Verdict of the strict condition over `[-M, M]`: on failure, a direction
/// `xi` and `tau` with `tau + xi . phi'(u) = 0` and `a(u) xi . xi = 0` on a
/// whole interval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrictReport {
    pub holds: bool,
    #[serde(rename = "M", with = "serde_rat")]
    pub m: Rat,
    #[serde(with = "serde_opt_rat")]
    pub tau: Option<Rat>,
    #[serde(with = "serde_opt_rat_vec")]
    pub witness: Option<Vec<Rat>>,
    #[serde(with = "serde_opt_int_vec")]
    pub witness_coords: Option<Vec<BigInt>>,
    #[serde(with = "serde_opt_rat_vec")]
    pub interval: Option<Vec<Rat>>,
}

pub fn check_strict_condition(
    flux: &FluxSpec,
    diff: &DiffusionSpec,
    lat: &LatticeBasis,
    m: &Rat,
) -> Result<StrictReport, ConditionError> {
    check_dims(flux, diff, lat)?;
    if !m.is_positive() {
        return Err(ModelError::NonPositiveBound.into());
    }
    if m > flux.bound() {
        return Err(ModelError::OutsideWorkingInterval(m.clone()).into());
    }
    let n = flux.n();
    let lo = -m.clone();
    let comps: Vec<PiecewisePoly> = flux.components().iter().map(|c| c.restrict(&lo, m)).collect::<Result<_, _>>()?;
    let entries: Vec<Vec<PiecewisePoly>> = diff
        .entries()
        .iter()
        .map(|row| row.iter().map(|e| e.restrict(&lo, m)).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()?;
    let mut all: Vec<Rat> = comps.iter().flat_map(|c| c.breakpoints().to_vec()).collect();
    all.extend(entries.iter().flatten().flat_map(|e| e.breakpoints().to_vec()));
    let comps: Vec<PiecewisePoly> = comps.iter().map(|c| c.refine(&all)).collect();
    let entries: Vec<Vec<PiecewisePoly>> = entries.iter().map(|r| r.iter().map(|e| e.refine(&all)).collect()).collect();
    let bps = comps[0].breakpoints().to_vec();
    let dual = dual_basis(lat);

    let along = |xi: &[Rat], j: usize| -> Poly {
        comps.iter().zip(xi).fold(Poly::zero(), |acc, (c, x)| &acc + &c.pieces()[j].scale(x))
    };
    let degenerate = |xi: &[Rat], j: usize| -> bool {
        entries.iter().all(|row| row.iter().zip(xi).fold(Poly::zero(), |acc, (e, x)| &acc + &e.pieces()[j].scale(x)).is_zero())
    };

    for j in 0..bps.len() - 1 {
        let degree = comps.iter().map(|c| c.pieces()[j].degree().unwrap_or(0)).max().unwrap_or(0);
        let adeg = entries.iter().flatten().map(|e| e.pieces()[j].degree().unwrap_or(0)).max().unwrap_or(0);
        let mut constraints: Vec<Vec<Rat>> = (2..=degree)
            .map(|d| comps.iter().map(|c| c.pieces()[j].coeff(d)).collect())
            .collect();
        for d in 0..=adeg {
            for row in &entries {
                constraints.push(row.iter().map(|e| e.pieces()[j].coeff(d)).collect());
            }
        }
        let s = Subspace::solutions_of(n, &constraints);
        let sub = lattice_points_in(&dual, &s);
        if let Some((xi, coords)) = shortest(&sub) {
            let slope = along(&xi, j).coeff(1);
            let ok = |k: usize| {
                let p = along(&xi, k);
                p.is_affine() && p.coeff(1) == slope && degenerate(&xi, k)
            };
            let (mut l, mut r) = (j, j);
            while r + 2 < bps.len() && ok(r + 1) {
                r += 1;
            }
            while l > 0 && ok(l - 1) {
                l -= 1;
            }
            return Ok(StrictReport {
                holds: false,
                m: m.clone(),
                tau: Some(-slope),
                witness: Some(xi),
                witness_coords: Some(coords),
                interval: Some(vec![bps[l].clone(), bps[r + 1].clone()]),
            });
        }
    }
    Ok(StrictReport { holds: true, m: m.clone(), tau: None, witness: None, witness_coords: None, interval: None })
}

/// Evaluations of the normalization properties on a reduced problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RFlags {
    /// The transformed lattice of periods is `Z^n`.
    pub r1: bool,
    /// `kappa . phi~` is affine near `I` exactly for `kappa` in the span of the last `m` axes.
    pub r2: bool,
    /// The last `m` transformed flux components are constant on the plateau.
    pub r3: bool,
    /// No nonzero lattice direction among the last `m` axes is degenerate near `I`.
    pub r4: bool,
}

/// Problem after the change of variables `y = Q x - c t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedProblem {
    pub flux_t: FluxSpec,
    pub diffusion_t: DiffusionSpec,
    /// Rows `zeta_i`: a basis of the dual lattice, the affine directions last.
    pub q: RatMatrix,
    pub q_inverse: RatMatrix,
    /// Integer coordinates of the rows of `Q` in the dual basis.
    pub q_coords: IntMatrix,
    pub c: Vec<Rat>,
    pub d: usize,
    pub plateau: (Rat, Rat),
    pub i: Rat,
    pub r_flags: RFlags,
}

impl ReducedProblem {
    /// `y = Q x - c t`
    pub fn reduced_coordinates(&self, x: &[Rat], t: &Rat) -> Vec<Rat> {
        self.q.iter().zip(&self.c).map(|(row, c)| vec_dot(row, x) - c * t).collect()
    }

    /// `x = Q^{-1} (y + c t)`
    pub fn original_coordinates(&self, y: &[Rat], t: &Rat) -> Vec<Rat> {
        let shifted: Vec<Rat> = y.iter().zip(&self.c).map(|(y, c)| y + c * t).collect();
        self.q_inverse.iter().map(|row| vec_dot(row, &shifted)).collect()
    }

    pub fn m(&self) -> usize {
        self.c.len() - self.d
    }

    /// The reduced data as a problem on the standard lattice.
    pub fn spec(&self) -> ProblemSpec {
        ProblemSpec::new(self.flux_t.clone(), self.diffusion_t.clone(), LatticeBasis::identity(self.c.len()))
            .expect("dimensions agree by construction")
    }
}

#[derive(Serialize)]
struct ReducedJson<'a> {
    #[serde(rename = "I", with = "serde_rat")]
    i: &'a Rat,
    d: usize,
    m: usize,
    #[serde(rename = "Q", with = "serde_rat_matrix")]
    q: &'a RatMatrix,
    #[serde(with = "serde_int_matrix")]
    q_dual_coords: &'a IntMatrix,
    #[serde(with = "serde_rat_vec")]
    c: &'a [Rat],
    #[serde(with = "serde_rat_vec")]
    plateau: Vec<Rat>,
    r_flags: RFlags,
    problem: crate::model::RawProblemSpec,
}

impl Serialize for ReducedProblem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ReducedJson {
            i: &self.i,
            d: self.d,
            m: self.m(),
            q: &self.q,
            q_dual_coords: &self.q_coords,
            c: &self.c,
            plateau: vec![self.plateau.0.clone(), self.plateau.1.clone()],
            r_flags: self.r_flags,
            problem: self.spec().to_raw(),
        }
        .serialize(s)
    }
}

pub fn reduce_problem(
    flux: &FluxSpec,
    diff: &DiffusionSpec,
    lat: &LatticeBasis,
    i: &Rat,
) -> Result<ReducedProblem, ConditionError> {
    check_dims(flux, diff, lat)?;
    let n = flux.n();
    let dual = dual_basis(lat);
    let loc = affine_locus(flux, i)?;
    let l0 = lattice_points_in(&dual, &loc.subspace);
    let m = l0.rank();
    let d = n - m;
    let (_, record) = complete_basis(&l0)?;
    // completion rows first, then the generators of L'_0
    let q_coords: IntMatrix = record.matrix[m..].iter().chain(&record.matrix[..m]).cloned().collect();
    let q = rat_mul(&int_to_rat(&q_coords), dual.rows());
    let q_inverse = inverse(&q).expect("Q is a lattice basis");
    let c: Vec<Rat> = q.iter().map(|z| vec_dot(&loc.velocity, z)).collect();
    let bound = flux.bound().clone();
    let flux_t = FluxSpec::new(
        q.iter().zip(&c).map(|(z, ci)| flux.dot(z).add_affine(&-ci.clone(), &Rat::zero()).simplified()).collect(),
        bound,
    )?;
    let diffusion_t = diff.transformed(&q)?;
    let plateau = (loc.vicinity[0].clone(), loc.vicinity[1].clone());

    let tail = Subspace::span(n, &(d..n).map(|k| unit(n, k)).collect::<Vec<_>>());
    let periods = rat_mul(lat.rows(), &transpose(&q));
    let r1 = rat_to_int(&periods).is_some_and(|p| int_det(&p).abs() == BigInt::from(1));
    let r2 = affine_locus(&flux_t, i)?.subspace == tail;
    let r3 = flux_t.components()[d..].iter().all(|f| constant_on(f, &plateau.0, &plateau.1));
    let r4 = degenerate_locus(&diffusion_t, i)?.intersect(&tail).is_zero();

    Ok(ReducedProblem {
        flux_t,
        diffusion_t,
        q,
        q_inverse,
        q_coords,
        c,
        d,
        plateau,
        i: i.clone(),
        r_flags: RFlags { r1, r2, r3, r4 },
    })
}

pub fn reduce(spec: &ProblemSpec, i: &Rat) -> Result<ReducedProblem, ConditionError> {
    reduce_problem(&spec.flux, &spec.diffusion, &spec.lattice, i)
}

fn unit(n: usize, k: usize) -> Vec<Rat> {
    (0..n).map(|j| if j == k { rat(1) } else { Rat::zero() }).collect()
}

fn constant_on(f: &PiecewisePoly, lo: &Rat, hi: &Rat) -> bool {
    let Ok(part) = f.restrict(lo, hi) else { return false };
    let first = &part.pieces()[0];
    first.is_constant() && part.pieces().iter().all(|p| p == first)
}

/// `u(t, x) = I + delta sin(2 pi (xi . x - c t))`, a solution whenever
/// `xi . phi` is affine with slope `c` and `a(u) xi = 0` on `[I - delta, I + delta]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterexampleField {
    #[serde(rename = "I", with = "serde_rat")]
    pub i: Rat,
    #[serde(with = "serde_rat")]
    pub delta: Rat,
    #[serde(with = "serde_rat_vec")]
    pub xi: Vec<Rat>,
    /// `xi` in dual-basis coordinates, so `xi . x = kappa . y` for fractional coordinates `y`.
    #[serde(with = "crate::rational::serde_int_vec")]
    pub kappa: Vec<BigInt>,
    #[serde(with = "serde_rat")]
    pub c: Rat,
    pub lattice: LatticeBasis,
}

/// Builds the travelling wave from a failing report; `delta` defaults to half
/// the distance from `I` to the nearer end of the vicinity.
pub fn counterexample(report: &ConditionReport, delta: Option<Rat>) -> Result<CounterexampleField, ConditionError> {
    let (Some(xi), Some(kappa), Some(vic), Some(c)) =
        (&report.witness, &report.witness_coords, &report.vicinity, &report.speed)
    else {
        return Err(ConditionError::ConditionHolds);
    };
    let i = &report.i;
    let room = crate::rational::rat_min(&(i - &vic[0]), &(&vic[1] - i));
    let delta = delta.unwrap_or_else(|| &room / rat(2));
    if !delta.is_positive() {
        return Err(ConditionError::NonPositiveDelta(delta));
    }
    if delta > room {
        return Err(ConditionError::DeltaTooLarge { delta, max: room });
    }
    Ok(CounterexampleField {
        i: i.clone(),
        delta,
        xi: xi.clone(),
        kappa: kappa.clone(),
        c: c.clone(),
        lattice: report.lattice.clone(),
    })
}

impl CounterexampleField {
    fn kappa_f64(&self) -> Vec<f64> {
        self.kappa.iter().map(|k| to_f64(&Rat::from_integer(k.clone()))).collect()
    }

    /// Value at physical position `x`.
    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        let phase: f64 = self.xi.iter().zip(x).map(|(a, b)| to_f64(a) * b).sum();
        to_f64(&self.i) + to_f64(&self.delta) * (2.0 * std::f64::consts::PI * (phase - to_f64(&self.c) * t)).sin()
    }

    /// Value at fractional coordinates `y` (`x = sum y_j e_j`).
    pub fn eval_fractional(&self, t: f64, y: &[f64]) -> f64 {
        let phase: f64 = self.kappa_f64().iter().zip(y).map(|(a, b)| a * b).sum();
        to_f64(&self.i) + to_f64(&self.delta) * (2.0 * std::f64::consts::PI * (phase - to_f64(&self.c) * t)).sin()
    }

    /// Exact average over the fractional-coordinate cell centred at `y` with widths `h`.
    pub fn cell_average(&self, t: f64, y: &[f64], h: &[f64]) -> f64 {
        let kappa = self.kappa_f64();
        let factor: f64 = kappa
            .iter()
            .zip(h)
            .map(|(k, h)| {
                let z = std::f64::consts::PI * k * h;
                if z == 0.0 { 1.0 } else { z.sin() / z }
            })
            .product();
        let centre = self.eval_fractional(t, y) - to_f64(&self.i);
        to_f64(&self.i) + factor * centre
    }

    /// Torus mean, equal to `I` at every time.
    pub fn mean(&self) -> f64 {
        to_f64(&self.i)
    }

    /// `(1/|T|) ∫ |u - I| dx = 2 delta / pi` at every time.
    pub fn l1_to_mean(&self) -> f64 {
        2.0 * to_f64(&self.delta) / std::f64::consts::PI
    }
}

/// Convenience: the default-amplitude counterexample for a problem at `I`.
pub fn counterexample_for(spec: &ProblemSpec, i: &Rat, delta: Option<Rat>) -> Result<CounterexampleField, ConditionError> {
    counterexample(&check_problem(spec, i)?, delta)
}

/// Whether `I` is a piece boundary of any flux or diffusion component.
pub fn is_breakpoint(spec: &ProblemSpec, i: &Rat) -> bool {
    let comps = spec.flux.refined();
    adjacent_pieces(comps[0].breakpoints(), i).len() == 2
        || adjacent_pieces(spec.diffusion.refined()[0][0].breakpoints(), i).len() == 2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn poly(c: &[Rat]) -> PiecewisePoly {
        PiecewisePoly::polynomial(rat(-1), rat(1), Poly::new(c.to_vec())).unwrap()
    }

    fn burgers() -> PiecewisePoly {
        poly(&[rat(0), rat(0), ratio(1, 2)])
    }

    #[test]
    fn burgers_holds() {
        let f = FluxSpec::new(vec![burgers()], rat(1)).unwrap();
        let a = DiffusionSpec::zero(1, rat(1)).unwrap();
        let r = check_condition(&f, &a, &LatticeBasis::identity(1), &rat(0)).unwrap();
        assert!(r.holds);
        assert!(r.witness.is_none() && r.vicinity.is_none());
        assert!(r.affine_subspace.is_zero());
    }

    #[test]
    fn zero_flux_zero_diffusion_fails_everywhere() {
        let f = FluxSpec::new(vec![poly(&[])], rat(1)).unwrap();
        let a = DiffusionSpec::zero(1, rat(1)).unwrap();
        for i in [rat(0), ratio(1, 3), ratio(-7, 8)] {
            let r = check_condition(&f, &a, &LatticeBasis::identity(1), &i).unwrap();
            assert!(!r.holds);
            assert_eq!(r.witness, Some(vec![rat(1)]));
            assert_eq!(r.vicinity, Some(vec![rat(-1), rat(1)]));
            assert_eq!(r.speed, Some(rat(0)));
        }
    }

    #[test]
    fn diffusion_in_affine_direction_restores_condition() {
        let f = FluxSpec::new(vec![burgers(), poly(&[])], rat(1)).unwrap();
        let sq = poly(&[rat(0), rat(0), rat(1)]);
        let a = DiffusionSpec::diagonal(vec![poly(&[]), sq], rat(1)).unwrap();
        let r = check_condition(&f, &a, &LatticeBasis::identity(2), &rat(0)).unwrap();
        assert!(r.holds);
        assert_eq!(r.affine_subspace, Subspace::span(2, &[vec![rat(0), rat(1)]]));
    }

    #[test]
    fn witness_is_a_dual_lattice_vector() {
        // L spanned by (2, 0), (0, 1): L' by (1/2, 0), (0, 1)
        let f = FluxSpec::new(vec![poly(&[]), burgers()], rat(1)).unwrap();
        let a = DiffusionSpec::zero(2, rat(1)).unwrap();
        let lat = LatticeBasis::from_integers(&[vec![2, 0], vec![0, 1]]).unwrap();
        let r = check_condition(&f, &a, &lat, &rat(0)).unwrap();
        assert_eq!(r.witness, Some(vec![ratio(1, 2), rat(0)]));
        assert_eq!(r.witness_coords, Some(vec![BigInt::from(1), BigInt::from(0)]));
    }

    #[test]
    fn dimension_and_range_errors() {
        let f = FluxSpec::new(vec![burgers()], rat(1)).unwrap();
        let a = DiffusionSpec::zero(1, rat(1)).unwrap();
        assert!(matches!(
            check_condition(&f, &a, &LatticeBasis::identity(2), &rat(0)),
            Err(ConditionError::Dimension { .. })
        ));
        assert!(matches!(
            check_condition(&f, &a, &LatticeBasis::identity(1), &rat(3)),
            Err(ConditionError::Model(ModelError::OutsideWorkingInterval(_)))
        ));
    }

    #[test]
    fn strict_condition_examples() {
        let zero = DiffusionSpec::zero(1, rat(1)).unwrap();
        let z1 = LatticeBasis::identity(1);
        let b = FluxSpec::new(vec![burgers()], rat(1)).unwrap();
        assert!(check_strict_condition(&b, &zero, &z1, &rat(1)).unwrap().holds);
        let lin = FluxSpec::new(vec![poly(&[rat(0), rat(1)])], rat(1)).unwrap();
        let r = check_strict_condition(&lin, &zero, &z1, &rat(1)).unwrap();
        assert!(!r.holds);
        assert_eq!(r.tau, Some(rat(-1)));
        assert_eq!(r.witness, Some(vec![rat(1)]));
        assert_eq!(r.interval, Some(vec![rat(-1), rat(1)]));
        let heat = DiffusionSpec::diagonal(vec![poly(&[rat(1)])], rat(1)).unwrap();
        assert!(check_strict_condition(&lin, &heat, &z1, &rat(1)).unwrap().holds);
    }

    #[test]
    fn reduction_of_burgers_is_identity() {
        let f = FluxSpec::new(vec![burgers()], rat(1)).unwrap();
        let a = DiffusionSpec::zero(1, rat(1)).unwrap();
        let r = reduce_problem(&f, &a, &LatticeBasis::identity(1), &rat(0)).unwrap();
        assert_eq!(r.d, 1);
        assert_eq!(r.q, vec![vec![rat(1)]]);
        assert_eq!(r.c, vec![rat(0)]);
        assert_eq!(r.r_flags, RFlags { r1: true, r2: true, r3: true, r4: true });
        assert_eq!(r.flux_t, f);
    }

    #[test]
    fn reduction_with_constant_component() {
        let f = FluxSpec::new(vec![burgers(), poly(&[rat(7)])], rat(1)).unwrap();
        let a = DiffusionSpec::zero(2, rat(1)).unwrap();
        let r = reduce_problem(&f, &a, &LatticeBasis::identity(2), &rat(0)).unwrap();
        assert_eq!(r.d, 1);
        assert_eq!(r.q[1], vec![rat(0), rat(1)]);
        assert_eq!(r.flux_t.components()[1], poly(&[rat(7)]));
        assert_eq!(r.plateau, (rat(-1), rat(1)));
        assert!(r.r_flags.r1 && r.r_flags.r2 && r.r_flags.r3);
        assert!(!r.r_flags.r4);
        assert!(!check_condition(&f, &a, &LatticeBasis::identity(2), &rat(0)).unwrap().holds);
    }

    #[test]
    fn reduction_with_moving_frame() {
        let f = FluxSpec::new(vec![burgers(), poly(&[rat(1), rat(3)])], rat(1)).unwrap();
        let a = DiffusionSpec::diagonal(vec![poly(&[]), poly(&[rat(0), rat(0), rat(1)])], rat(1)).unwrap();
        let r = reduce_problem(&f, &a, &LatticeBasis::identity(2), &rat(0)).unwrap();
        assert_eq!(r.q[1], vec![rat(0), rat(1)]);
        assert_eq!(r.c[1], rat(3));
        assert_eq!(r.flux_t.components()[1], poly(&[rat(1)]));
        assert_eq!(r.diffusion_t.entry(1, 1), &poly(&[rat(0), rat(0), rat(1)]));
        assert_eq!(r.r_flags, RFlags { r1: true, r2: true, r3: true, r4: true });
        let x = vec![ratio(1, 3), ratio(-2, 5)];
        let t = ratio(7, 4);
        assert_eq!(r.original_coordinates(&r.reduced_coordinates(&x, &t), &t), x);
    }

    #[test]
    fn counterexample_defaults_and_errors() {
        let f = FluxSpec::new(vec![poly(&[rat(0), rat(2)])], rat(1)).unwrap();
        let a = DiffusionSpec::zero(1, rat(1)).unwrap();
        let rep = check_condition(&f, &a, &LatticeBasis::identity(1), &ratio(1, 2)).unwrap();
        let ce = counterexample(&rep, None).unwrap();
        assert_eq!(ce.delta, ratio(1, 4));
        assert_eq!(ce.c, rat(2));
        assert!((ce.eval(0.0, &[0.125]) - (0.5 + 0.25 * (std::f64::consts::PI / 4.0).sin())).abs() < 1e-15);
        assert!(matches!(counterexample(&rep, Some(ratio(3, 4))), Err(ConditionError::DeltaTooLarge { .. })));
        let b = FluxSpec::new(vec![burgers()], rat(1)).unwrap();
        let holds = check_condition(&b, &a, &LatticeBasis::identity(1), &rat(0)).unwrap();
        assert_eq!(counterexample(&holds, None), Err(ConditionError::ConditionHolds));
    }

    #[test]
    fn counterexample_mean_and_l1_by_quadrature() {
        let f = FluxSpec::new(vec![poly(&[rat(0), rat(1)])], rat(1)).unwrap();
        let a = DiffusionSpec::zero(1, rat(1)).unwrap();
        let ce = counterexample(&check_condition(&f, &a, &LatticeBasis::identity(1), &rat(0)).unwrap(), None).unwrap();
        let n = 4096;
        for t in [0.0, 0.37, 2.5] {
            let vals: Vec<f64> = (0..n).map(|k| ce.eval(t, &[(k as f64 + 0.5) / n as f64])).collect();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let l1 = vals.iter().map(|v| v.abs()).sum::<f64>() / n as f64;
            assert!(mean.abs() < 1e-12);
            assert!((l1 - ce.l1_to_mean()).abs() < 1e-6);
        }
    }

    #[test]
    fn report_json_round_trip() {
        let f = FluxSpec::new(vec![poly(&[])], rat(1)).unwrap();
        let a = DiffusionSpec::zero(1, rat(1)).unwrap();
        let r = check_condition(&f, &a, &LatticeBasis::identity(1), &ratio(1, 3)).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        let back: ConditionReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
