//! Compiled problem data and the explicit local Lax–Friedrichs update with
//! central differencing of `A(u)`.

use rayon::prelude::*;

use super::{Grid, PeriodicField, SchemeConfig, SolverError};
use crate::model::{horner, real_roots_in, CompiledPoly, DiffusionSpec, FluxSpec, PiecewisePoly, SqrtPrimitive};
use crate::rational::{to_f64, Rat};

/// Cells per piece in the tables of `B_r`.
const SQRT_TABLE_CELLS: usize = 512;

/// Pieces whose derivative has higher degree fall back to secant sampling.
const EXACT_DEGREE_CAP: usize = 16;

/// `sup |p'|` over subintervals, from critical points tabulated once per piece.
#[derive(Debug, Clone)]
pub struct LipTable {
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
    crits: Vec<Vec<f64>>,
    approximate: Vec<bool>,
    samples: usize,
}

fn deriv(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(d, x)| x * d as f64).collect()
}

impl LipTable {
    pub fn new(p: &PiecewisePoly, samples: usize) -> Self {
        let compiled = p.compile();
        let m = compiled.pieces.len();
        let mut derivs = Vec::with_capacity(m);
        let mut crits = Vec::with_capacity(m);
        let mut approximate = Vec::with_capacity(m);
        for (j, c) in compiled.pieces.iter().enumerate() {
            let d = deriv(c);
            let approx = d.len() > EXACT_DEGREE_CAP + 1;
            let (lo, hi) = (compiled.breakpoints[j], compiled.breakpoints[j + 1]);
            crits.push(if approx { Vec::new() } else { real_roots_in(&deriv(&d), lo, hi) });
            derivs.push(d);
            approximate.push(approx);
        }
        LipTable {
            breakpoints: compiled.breakpoints,
            pieces: compiled.pieces,
            derivs,
            crits,
            approximate,
            samples: samples.max(2),
        }
    }

    pub fn is_approximate(&self) -> bool {
        self.approximate.iter().any(|&a| a)
    }

    /// `sup |p'|` over `[lo, hi]`; the end pieces extend past the domain.
    pub fn bound_on(&self, lo: f64, hi: f64) -> f64 {
        let m = self.pieces.len();
        let mut best = 0.0f64;
        for j in 0..m {
            let a = if j == 0 { lo } else { lo.max(self.breakpoints[j]) };
            let b = if j + 1 == m { hi } else { hi.min(self.breakpoints[j + 1]) };
            if a > b {
                continue;
            }
            if self.approximate[j] {
                let p = &self.pieces[j];
                let k = self.samples;
                let mut prev = horner(p, a);
                for s in 1..=k {
                    let x = a + (b - a) * s as f64 / k as f64;
                    let v = horner(p, x);
                    let w = (b - a) / k as f64;
                    if w > 0.0 {
                        best = best.max((v - prev).abs() / w);
                    }
                    prev = v;
                }
                best = best.max(horner(&self.derivs[j], a).abs()).max(horner(&self.derivs[j], b).abs());
                continue;
            }
            let d = &self.derivs[j];
            best = best.max(horner(d, a).abs()).max(horner(d, b).abs());
            for &c in &self.crits[j] {
                if c > a && c < b {
                    best = best.max(horner(d, c).abs());
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzBound {
    pub value: f64,
    /// Set when some piece was too high in degree for exact critical points.
    pub approximate: bool,
}

/// `sup |p'|` over `[-M, M]`.
pub fn lipschitz_bound(p: &PiecewisePoly, m: &Rat, samples: usize) -> LipschitzBound {
    let table = LipTable::new(p, samples);
    let mf = to_f64(m);
    LipschitzBound { value: table.bound_on(-mf, mf), approximate: table.is_approximate() }
}

#[inline]
fn llf(f_l: f64, f_r: f64, u_l: f64, u_r: f64, alpha: f64) -> f64 {
    0.5 * (f_l + f_r) - 0.5 * alpha * (u_r - u_l)
}

/// Local Lax–Friedrichs flux `½(phi(u_l) + phi(u_r)) - ½ alpha (u_r - u_l)`.
pub fn numerical_flux(phi: &PiecewisePoly, u_l: f64, u_r: f64, alpha: f64) -> Result<f64, SolverError> {
    let table = LipTable::new(phi, 64);
    let required = table.bound_on(u_l.min(u_r), u_l.max(u_r));
    if alpha < required * (1.0 - 1e-12) {
        return Err(SolverError::AlphaTooSmall { alpha, required });
    }
    let c = phi.compile();
    Ok(llf(c.eval(u_l), c.eval(u_r), u_l, u_r, alpha))
}

/// Flux and diffusion primitives in `f64` form with their Lipschitz tables.
#[derive(Debug, Clone)]
pub struct Dynamics {
    n: usize,
    bound: f64,
    flux: Vec<CompiledPoly>,
    flux_lip: Vec<LipTable>,
    prim: Vec<Vec<CompiledPoly>>,
    prim_lip: Vec<Vec<LipTable>>,
    active: Vec<Vec<bool>>,
    diagonal: bool,
    sqrt_primitives: Option<Vec<SqrtPrimitive>>,
}

impl Dynamics {
    pub fn new(flux: &FluxSpec, diff: &DiffusionSpec, lipschitz_samples: usize) -> Result<Self, SolverError> {
        let n = flux.n();
        if !(1..=2).contains(&n) || diff.n() != n {
            return Err(SolverError::Dimension(format!("the solver supports n = 1 or 2 (got flux {n}, diffusion {})", diff.n())));
        }
        let prim: Vec<Vec<CompiledPoly>> =
            (0..n).map(|i| (0..n).map(|j| diff.primitive(i, j).compile()).collect()).collect();
        let active = (0..n).map(|i| (0..n).map(|j| !diff.entry(i, j).compile().is_zero()).collect()).collect();
        Ok(Dynamics {
            n,
            bound: to_f64(flux.bound()),
            flux: flux.components().iter().map(|c| c.compile()).collect(),
            flux_lip: flux.components().iter().map(|c| LipTable::new(c, lipschitz_samples)).collect(),
            prim,
            prim_lip: (0..n)
                .map(|i| (0..n).map(|j| LipTable::new(diff.primitive(i, j), lipschitz_samples)).collect())
                .collect(),
            active,
            diagonal: diff.is_diagonal(),
            sqrt_primitives: SqrtPrimitive::for_diagonal(diff, SQRT_TABLE_CELLS).ok(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The state bound `M` of the problem data.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    /// `B_r` with `B_r' = sqrt(a_rr)`, for diagonal diffusion only.
    pub fn sqrt_primitives(&self) -> Option<&[SqrtPrimitive]> {
        self.sqrt_primitives.as_deref()
    }

    /// Whether some `a_ij` is not identically zero.
    pub fn has_diffusion(&self) -> bool {
        self.active.iter().flatten().any(|&a| a)
    }

    pub fn flux(&self, axis: usize) -> &CompiledPoly {
        &self.flux[axis]
    }

    pub fn primitive(&self, i: usize, j: usize) -> &CompiledPoly {
        &self.prim[i][j]
    }

    /// `sup |phi_axis'|` over `[lo, hi]`.
    pub fn flux_lipschitz(&self, axis: usize, lo: f64, hi: f64) -> f64 {
        self.flux_lip[axis].bound_on(lo, hi)
    }

    /// `max_j sup |a_axis,j|` over `[lo, hi]`.
    pub fn diffusion_bound(&self, axis: usize, lo: f64, hi: f64) -> f64 {
        (0..self.n).map(|j| self.prim_lip[axis][j].bound_on(lo, hi)).fold(0.0, f64::max)
    }

    pub fn approximate_bounds(&self) -> bool {
        self.flux_lip.iter().chain(self.prim_lip.iter().flatten()).any(LipTable::is_approximate)
    }
}

/// Largest stable step: `cfl · min_i [h_i / (2n L_phi_i), h_i² / (4n² L_a_i)]`
/// with bounds over `[-m, m]`; `t_end` for a static problem.
pub fn cfl_dt(dynamics: &Dynamics, grid: &Grid, m: f64, cfg: &SchemeConfig) -> f64 {
    let n = grid.n() as f64;
    let mut dt = f64::INFINITY;
    for axis in 0..grid.n() {
        let h = grid.h(axis);
        let lf = dynamics.flux_lipschitz(axis, -m, m);
        let la = dynamics.diffusion_bound(axis, -m, m);
        if lf > 0.0 {
            dt = dt.min(h / (2.0 * n * lf));
        }
        if la > 0.0 {
            dt = dt.min(h * h / (4.0 * n * n * la));
        }
    }
    if dt.is_finite() { cfg.cfl * dt } else { cfg.t_end }
}

/// Reusable buffers and neighbour tables for repeated steps on one grid.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Grid,
    plus: Vec<Vec<usize>>,
    minus: Vec<Vec<usize>>,
    phi: Vec<Vec<f64>>,
    iface: Vec<Vec<f64>>,
    a_vals: Vec<Vec<Vec<f64>>>,
    parallel_threshold: usize,
}

impl Stepper {
    pub fn new(grid: &Grid, parallel_threshold: usize) -> Self {
        let n = grid.n();
        let len = grid.len();
        let plus = (0..n).map(|r| (0..len).map(|j| grid.neighbour(j, r, true)).collect()).collect();
        let minus = (0..n).map(|r| (0..len).map(|j| grid.neighbour(j, r, false)).collect()).collect();
        Stepper {
            grid: grid.clone(),
            plus,
            minus,
            phi: vec![vec![0.0; len]; n],
            iface: vec![vec![0.0; len]; n],
            a_vals: vec![vec![vec![0.0; len]; n]; n],
            parallel_threshold,
        }
    }

    fn parallel(&self) -> bool {
        self.grid.len() >= self.parallel_threshold
    }

    fn map_into(&self, out: &mut [f64], f: impl Fn(usize) -> f64 + Sync) {
        if self.parallel() {
            out.par_iter_mut().enumerate().for_each(|(j, o)| *o = f(j));
        } else {
            out.iter_mut().enumerate().for_each(|(j, o)| *o = f(j));
        }
    }

    /// `sum_ij D_i D_j A_ij(u)` per cell.
    pub fn diffusion_increment(&mut self, dynamics: &Dynamics, u: &[f64], out: &mut [f64]) {
        let n = self.grid.n();
        let mut a_vals = std::mem::take(&mut self.a_vals);
        for i in 0..n {
            for j in 0..n {
                if dynamics.active[i][j] {
                    let p = &dynamics.prim[i][j];
                    self.map_into(&mut a_vals[i][j], |k| p.eval(u[k]));
                }
            }
        }
        let this = &*self;
        let av = &a_vals;
        this.map_into(out, |k| this.diffusion_at(dynamics, av, k));
        self.a_vals = a_vals;
    }

    #[inline]
    fn diffusion_at(&self, dynamics: &Dynamics, a: &[Vec<Vec<f64>>], k: usize) -> f64 {
        let n = self.grid.n();
        let mut acc = 0.0;
        for r in 0..n {
            if dynamics.active[r][r] {
                let h = self.grid.h(r);
                let v = &a[r][r];
                acc += (v[self.plus[r][k]] - 2.0 * v[k] + v[self.minus[r][k]]) / (h * h);
            }
        }
        for r in 0..n {
            for s in r + 1..n {
                if dynamics.active[r][s] {
                    let v = &a[r][s];
                    let (pr, mr) = (self.plus[r][k], self.minus[r][k]);
                    let pp = v[self.plus[s][pr]];
                    let pm = v[self.minus[s][pr]];
                    let mp = v[self.plus[s][mr]];
                    let mm = v[self.minus[s][mr]];
                    // both orderings r, s and s, r of the symmetric cross term
                    acc += 2.0 * (pp - pm - mp + mm) / (4.0 * self.grid.h(r) * self.grid.h(s));
                }
            }
        }
        acc
    }

    /// One explicit step with wave-speed bounds `alpha` (one per axis).
    pub fn advance(&mut self, dynamics: &Dynamics, u: &[f64], dt: f64, alpha: &[f64], out: &mut [f64]) {
        let n = self.grid.n();
        let mut phi = std::mem::take(&mut self.phi);
        let mut iface = std::mem::take(&mut self.iface);
        for r in 0..n {
            let f = &dynamics.flux[r];
            self.map_into(&mut phi[r], |k| f.eval(u[k]));
            let (p, plus, a) = (&phi[r], &self.plus[r], alpha[r]);
            self.map_into(&mut iface[r], |k| llf(p[k], p[plus[k]], u[k], u[plus[k]], a));
        }
        self.diffusion_increment(dynamics, u, out);
        let this = &*self;
        let fl = &iface;
        let update = |k: usize, d: f64| -> f64 {
            let mut div = 0.0;
            for r in 0..n {
                div += (fl[r][k] - fl[r][this.minus[r][k]]) / this.grid.h(r);
            }
            u[k] - dt * div + dt * d
        };
        if self.parallel() {
            out.par_iter_mut().enumerate().for_each(|(k, o)| *o = update(k, *o));
        } else {
            out.iter_mut().enumerate().for_each(|(k, o)| *o = update(k, *o));
        }
        self.phi = phi;
        self.iface = iface;
    }
}

/// Wave-speed bounds over the state range `[lo, hi]`.
pub fn alphas(dynamics: &Dynamics, lo: f64, hi: f64) -> Vec<f64> {
    (0..dynamics.n()).map(|r| dynamics.flux_lipschitz(r, lo, hi)).collect()
}

/// Per-cell `sum_ij D_i D_j A_ij(u)` with periodic wraparound.
pub fn diffusion_increment(dynamics: &Dynamics, field: &PeriodicField) -> Vec<f64> {
    let mut s = Stepper::new(field.grid(), usize::MAX);
    let mut out = vec![0.0; field.len()];
    s.diffusion_increment(dynamics, field.values(), &mut out);
    out
}

/// One step of size `dt`; rejects steps beyond the stability bound.
pub fn step(dynamics: &Dynamics, field: &PeriodicField, dt: f64, cfg: &SchemeConfig) -> Result<PeriodicField, SolverError> {
    field.check_inside(dynamics.bound())?;
    let max = cfl_dt(dynamics, field.grid(), field.bound(), &SchemeConfig { cfl: 1.0, ..cfg.clone() });
    if dt > max * (1.0 + 1e-12) || dt <= 0.0 || !dt.is_finite() {
        return Err(SolverError::Cfl { dt, max });
    }
    let (lo, hi) = field.range();
    let mut s = Stepper::new(field.grid(), cfg.parallel_threshold);
    let mut out = vec![0.0; field.len()];
    s.advance(dynamics, field.values(), dt, &alphas(dynamics, lo, hi), &mut out);
    PeriodicField::new(field.grid().clone(), out)
}
