//! Conservative explicit finite-volume evolution on the unit torus `[0, 1)^n`,
//! `n = 1, 2`.

mod initial;
pub mod io;
mod scheme;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{DiagnosticsRow, PairAudit, StepAudit, StepAuditor};

pub use initial::InitialData;
pub use scheme::{
    alphas, cfl_dt, diffusion_increment, lipschitz_bound, numerical_flux, step, Dynamics, LipTable, LipschitzBound,
    Stepper,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("{0}")]
    Dimension(String),
    #[error("field has {got} values but the grid has {expected} cells")]
    Length { expected: usize, got: usize },
    #[error("field value {value} at cell {cell} is not finite")]
    NonFinite { cell: usize, value: f64 },
    #[error("field value {value} lies outside the working interval [-{m}, {m}]")]
    OutsideWorkingInterval { value: f64, m: f64 },
    #[error("time step {dt} exceeds the stability bound {max}")]
    Cfl { dt: f64, max: f64 },
    #[error("wave speed bound {alpha} is below the local Lipschitz constant {required}")]
    AlphaTooSmall { alpha: f64, required: f64 },
    #[error("invalid scheme configuration: {0}")]
    Config(String),
    #[error("trajectories are not synchronized")]
    Unsynchronized,
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// Uniform periodic grid with `N_i` cells per axis, row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    cells: Vec<usize>,
}

impl Grid {
    pub fn new(cells: Vec<usize>) -> Result<Self, SolverError> {
        if !(1..=2).contains(&cells.len()) {
            return Err(SolverError::Grid(format!("dimension {} not supported (1 or 2)", cells.len())));
        }
        if let Some(&c) = cells.iter().find(|&&c| c < 4) {
            return Err(SolverError::Grid(format!("{c} cells on an axis; at least 4 required")));
        }
        Ok(Grid { cells })
    }

    pub fn n(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h(&self, axis: usize) -> f64 {
        1.0 / self.cells[axis] as f64
    }

    fn stride(&self, axis: usize) -> usize {
        self.cells[axis + 1..].iter().product()
    }

    pub fn multi_index(&self, k: usize) -> Vec<usize> {
        (0..self.n()).map(|r| (k / self.stride(r)) % self.cells[r]).collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().enumerate().map(|(r, &i)| (i % self.cells[r]) * self.stride(r)).sum()
    }

    /// Cell centre in `[0, 1)^n`.
    pub fn centre(&self, k: usize) -> Vec<f64> {
        self.multi_index(k).iter().enumerate().map(|(r, &i)| (i as f64 + 0.5) * self.h(r)).collect()
    }

    /// Periodic neighbour along `axis`.
    pub fn neighbour(&self, k: usize, axis: usize, forward: bool) -> usize {
        let s = self.stride(axis);
        let n = self.cells[axis];
        let i = (k / s) % n;
        match (forward, i) {
            (true, i) if i + 1 == n => k - (n - 1) * s,
            (true, _) => k + s,
            (false, 0) => k + (n - 1) * s,
            (false, _) => k - s,
        }
    }

    /// Cyclic shift of the cell indices by `offset` along every axis.
    pub fn shift_index(&self, k: usize, offset: &[isize]) -> usize {
        let idx: Vec<usize> = self
            .multi_index(k)
            .iter()
            .zip(&self.cells)
            .zip(offset)
            .map(|((&i, &n), &o)| (i as isize + o).rem_euclid(n as isize) as usize)
            .collect();
        self.flat_index(&idx)
    }
}

/// Cell averages on a grid, all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    grid: Grid,
    values: Vec<f64>,
    bound: f64,
}

impl PeriodicField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, SolverError> {
        if values.len() != grid.len() {
            return Err(SolverError::Length { expected: grid.len(), got: values.len() });
        }
        if let Some((cell, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(SolverError::NonFinite { cell, value });
        }
        let bound = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(PeriodicField { grid, values, bound })
    }

    pub fn constant(grid: Grid, value: f64) -> Result<Self, SolverError> {
        let n = grid.len();
        Self::new(grid, vec![value; n])
    }

    /// Samples `f` at cell centres.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self, SolverError> {
        let values = (0..grid.len()).map(|k| f(&grid.centre(k))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `max |u|`
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// `(min u, max u)`
    pub fn range(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn check_inside(&self, m: f64) -> Result<(), SolverError> {
        match self.values.iter().find(|v| v.abs() > m * (1.0 + 1e-12)) {
            Some(&value) => Err(SolverError::OutsideWorkingInterval { value, m }),
            None => Ok(()),
        }
    }

    /// The field cyclically shifted by `offset` cells.
    pub fn shifted(&self, offset: &[isize]) -> Self {
        let mut values = vec![0.0; self.len()];
        for (k, &v) in self.values.iter().enumerate() {
            values[self.grid.shift_index(k, offset)] = v;
        }
        PeriodicField { grid: self.grid.clone(), values, bound: self.bound }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxScheme {
    #[default]
    LocalLaxFriedrichs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeConfig {
    pub cfl: f64,
    pub t_end: f64,
    /// Snapshot cadence in steps; 0 keeps only the initial and final states.
    pub snapshot_every: usize,
    /// Cadence of the recorded diagnostic rows; per-step audits run regardless.
    pub diagnostics_every: usize,
    pub flux_scheme: FluxScheme,
    pub lipschitz_samples: usize,
    /// Fixed step instead of the adaptive one; rejected if unstable.
    pub dt: Option<f64>,
    pub max_steps: Option<usize>,
    /// Cell count from which steps run in parallel.
    pub parallel_threshold: usize,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            cfl: 0.9,
            t_end: 1.0,
            snapshot_every: 0,
            diagnostics_every: 1,
            flux_scheme: FluxScheme::LocalLaxFriedrichs,
            lipschitz_samples: 64,
            dt: None,
            max_steps: None,
            parallel_threshold: 1 << 14,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(SolverError::Config(format!("cfl = {} must lie in (0, 1]", self.cfl)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(SolverError::Config(format!("t_end = {} must be positive", self.t_end)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(SolverError::Config(format!("dt = {dt} must be positive")));
            }
        }
        if self.diagnostics_every == 0 {
            return Err(SolverError::Config("diagnostics_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Recorded history of a run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Times of the snapshots, strictly increasing from 0.
    pub times: Vec<f64>,
    pub snapshots: Vec<PeriodicField>,
    pub diagnostics: Vec<DiagnosticsRow>,
    pub audit: StepAudit,
    pub steps: usize,
    /// Time of every completed step, starting with 0.
    pub step_times: Vec<f64>,
}

impl Trajectory {
    pub fn initial(&self) -> &PeriodicField {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &PeriodicField {
        self.snapshots.last().expect("a trajectory holds at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    /// `(t, ||u(t) - I||_1)` from the diagnostic rows.
    pub fn l1_series(&self) -> Vec<(f64, f64)> {
        self.diagnostics.iter().map(|r| (r.t, r.l1_to_mean)).collect()
    }
}

struct Recorder {
    cfg: SchemeConfig,
    traj: Trajectory,
}

impl Recorder {
    fn new(cfg: &SchemeConfig, u0: &PeriodicField, row: DiagnosticsRow) -> Self {
        Recorder {
            cfg: cfg.clone(),
            traj: Trajectory {
                times: vec![0.0],
                snapshots: vec![u0.clone()],
                diagnostics: vec![row],
                audit: StepAudit::default(),
                steps: 0,
                step_times: vec![0.0],
            },
        }
    }

    fn record(&mut self, steps: usize, t: f64, last: bool, values: &[f64], row: impl FnOnce() -> DiagnosticsRow) -> Result<(), SolverError> {
        self.traj.steps = steps;
        self.traj.step_times.push(t);
        if last || steps % self.cfg.diagnostics_every == 0 {
            self.traj.diagnostics.push(row());
        }
        if last || (self.cfg.snapshot_every > 0 && steps % self.cfg.snapshot_every == 0) {
            let grid = self.traj.snapshots[0].grid().clone();
            self.traj.times.push(t);
            self.traj.snapshots.push(PeriodicField::new(grid, values.to_vec())?);
        }
        Ok(())
    }
}

fn range_of(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn bound_of(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn check_values(values: &[f64], m: f64) -> Result<(), SolverError> {
    if let Some((cell, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(SolverError::NonFinite { cell, value });
    }
    if let Some(&value) = values.iter().find(|v| v.abs() > m * (1.0 + 1e-9)) {
        return Err(SolverError::OutsideWorkingInterval { value, m });
    }
    Ok(())
}

/// Next step size: the adaptive bound or the override, clamped to `t_end`.
fn next_dt(dynamics: &Dynamics, grid: &Grid, m: f64, t: f64, cfg: &SchemeConfig) -> Result<(f64, bool), SolverError> {
    let max = cfl_dt(dynamics, grid, m, cfg);
    let dt = match cfg.dt {
        Some(dt) => {
            let hard = cfl_dt(dynamics, grid, m, &SchemeConfig { cfl: 1.0, ..cfg.clone() });
            if dt > hard * (1.0 + 1e-12) {
                return Err(SolverError::Cfl { dt, max: hard });
            }
            dt
        }
        None => max,
    };
    if t + dt >= cfg.t_end {
        Ok((cfg.t_end - t, true))
    } else {
        Ok((dt, false))
    }
}

/// Evolves `u0` to `cfg.t_end` (or `cfg.max_steps`), auditing every step.
pub fn run(dynamics: &Dynamics, u0: &PeriodicField, cfg: &SchemeConfig) -> Result<Trajectory, SolverError> {
    cfg.validate()?;
    if u0.grid().n() != dynamics.n() {
        return Err(SolverError::Dimension(format!("grid dimension {} but problem dimension {}", u0.grid().n(), dynamics.n())));
    }
    u0.check_inside(dynamics.bound())?;
    let grid = u0.grid().clone();
    let mut auditor = StepAuditor::new(dynamics, u0);
    let mut rec = Recorder::new(cfg, u0, auditor.row(0.0, u0.values()));
    let mut stepper = Stepper::new(&grid, cfg.parallel_threshold);
    let mut u = u0.values().to_vec();
    let mut next = vec![0.0; u.len()];
    let mut t = 0.0;
    let mut steps = 0;
    while t < cfg.t_end && cfg.max_steps.map_or(true, |s| steps < s) {
        let (dt, last) = next_dt(dynamics, &grid, bound_of(&u), t, cfg)?;
        let (lo, hi) = range_of(&u);
        stepper.advance(dynamics, &u, dt, &alphas(dynamics, lo, hi), &mut next);
        check_values(&next, dynamics.bound())?;
        auditor.observe(&u, &next, dt);
        std::mem::swap(&mut u, &mut next);
        t = if last { cfg.t_end } else { t + dt };
        steps += 1;
        let stop = last || cfg.max_steps == Some(steps);
        rec.record(steps, t, stop, &u, || auditor.row(t, &u))?;
    }
    let mut traj = rec.traj;
    traj.audit = auditor.finish();
    Ok(traj)
}

/// Two runs sharing every step size and wave-speed bound, so the discrete
/// L¹ contraction applies to the pair.
pub fn run_pair(
    dynamics: &Dynamics,
    u0: &PeriodicField,
    v0: &PeriodicField,
    cfg: &SchemeConfig,
) -> Result<(Trajectory, Trajectory, PairAudit), SolverError> {
    cfg.validate()?;
    if u0.grid() != v0.grid() {
        return Err(SolverError::Unsynchronized);
    }
    u0.check_inside(dynamics.bound())?;
    v0.check_inside(dynamics.bound())?;
    let grid = u0.grid().clone();
    let mut aud = [StepAuditor::new(dynamics, u0), StepAuditor::new(dynamics, v0)];
    let mut recs = [
        Recorder::new(cfg, u0, aud[0].row(0.0, u0.values())),
        Recorder::new(cfg, v0, aud[1].row(0.0, v0.values())),
    ];
    let mut stepper = Stepper::new(&grid, cfg.parallel_threshold);
    let mut us = [u0.values().to_vec(), v0.values().to_vec()];
    let mut next = vec![0.0; grid.len()];
    let mut pair = PairAudit::new(crate::diagnostics::l1_between(&us[0], &us[1]));
    let mut t = 0.0;
    let mut steps = 0;
    while t < cfg.t_end && cfg.max_steps.map_or(true, |s| steps < s) {
        let m = bound_of(&us[0]).max(bound_of(&us[1]));
        let (dt, last) = next_dt(dynamics, &grid, m, t, cfg)?;
        let (lo0, hi0) = range_of(&us[0]);
        let (lo1, hi1) = range_of(&us[1]);
        let alpha = alphas(dynamics, lo0.min(lo1), hi0.max(hi1));
        t = if last { cfg.t_end } else { t + dt };
        steps += 1;
        let stop = last || cfg.max_steps == Some(steps);
        for s in 0..2 {
            stepper.advance(dynamics, &us[s], dt, &alpha, &mut next);
            check_values(&next, dynamics.bound())?;
            aud[s].observe(&us[s], &next, dt);
            std::mem::swap(&mut us[s], &mut next);
            let (a, u) = (&aud[s], &us[s]);
            recs[s].record(steps, t, stop, u, || a.row(t, u))?;
        }
        pair.observe(t, crate::diagnostics::l1_between(&us[0], &us[1]));
    }
    let [a0, a1] = aud;
    let [r0, r1] = recs;
    let (mut t0, mut t1) = (r0.traj, r1.traj);
    t0.audit = a0.finish();
    t1.audit = a1.finish();
    Ok((t0, t1, pair))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DiffusionSpec, FluxSpec, PiecewisePoly, Poly};
    use crate::rational::{rat, ratio, Rat};

    fn poly(c: &[Rat]) -> PiecewisePoly {
        PiecewisePoly::polynomial(rat(-1), rat(1), Poly::new(c.to_vec())).unwrap()
    }

    fn burgers() -> Dynamics {
        Dynamics::new(
            &FluxSpec::new(vec![poly(&[rat(0), rat(0), ratio(1, 2)])], rat(1)).unwrap(),
            &DiffusionSpec::zero(1, rat(1)).unwrap(),
            64,
        )
        .unwrap()
    }

    #[test]
    fn grid_indexing() {
        let g = Grid::new(vec![4, 5]).unwrap();
        assert_eq!(g.len(), 20);
        assert_eq!(g.multi_index(7), vec![1, 2]);
        assert_eq!(g.neighbour(4, 1, true), 0);
        assert_eq!(g.neighbour(0, 0, false), 15);
        assert_eq!(g.centre(0), vec![0.125, 0.1]);
        assert!(Grid::new(vec![3]).is_err());
        assert!(Grid::new(vec![4, 4, 4]).is_err());
    }

    #[test]
    fn short_horizon_is_one_clamped_step() {
        let grid = Grid::new(vec![16]).unwrap();
        let u0 = PeriodicField::from_fn(grid, |y| 0.5 * (2.0 * std::f64::consts::PI * y[0]).sin()).unwrap();
        let cfg = SchemeConfig { t_end: 1e-6, ..SchemeConfig::default() };
        let tr = run(&burgers(), &u0, &cfg).unwrap();
        assert_eq!(tr.steps, 1);
        assert_eq!(tr.final_time(), 1e-6);
    }

    #[test]
    fn static_problem_stays_constant() {
        let d = Dynamics::new(
            &FluxSpec::new(vec![poly(&[])], rat(1)).unwrap(),
            &DiffusionSpec::zero(1, rat(1)).unwrap(),
            64,
        )
        .unwrap();
        let grid = Grid::new(vec![16]).unwrap();
        let u0 = PeriodicField::from_fn(grid, |y| 0.5 * (2.0 * std::f64::consts::PI * y[0]).sin()).unwrap();
        let tr = run(&d, &u0, &SchemeConfig { t_end: 2.0, ..SchemeConfig::default() }).unwrap();
        assert_eq!(tr.last().values(), u0.values());
        assert_eq!(tr.steps, 1);
    }

    #[test]
    fn oversized_dt_override_is_rejected() {
        let grid = Grid::new(vec![64]).unwrap();
        let u0 = PeriodicField::from_fn(grid, |y| 0.5 * (2.0 * std::f64::consts::PI * y[0]).sin()).unwrap();
        let cfg = SchemeConfig { dt: Some(0.5), ..SchemeConfig::default() };
        assert!(matches!(run(&burgers(), &u0, &cfg), Err(SolverError::Cfl { .. })));
    }

    #[test]
    fn shift_equivariance_is_exact() {
        let grid = Grid::new(vec![32]).unwrap();
        let u0 = PeriodicField::from_fn(grid, |y| 0.6 * (2.0 * std::f64::consts::PI * y[0]).sin() + 0.2 * y[0]).unwrap();
        let cfg = SchemeConfig { t_end: 0.3, ..SchemeConfig::default() };
        let a = run(&burgers(), &u0.shifted(&[5]), &cfg).unwrap();
        let b = run(&burgers(), &u0, &cfg).unwrap();
        assert_eq!(a.last().values(), b.last().shifted(&[5]).values());
    }
}
