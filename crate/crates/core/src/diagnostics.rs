//! Discrete audits of the a-priori properties of entropy solutions: mass
//! conservation, the maximum principle, entropy decrease, L¹ contraction,
//! the dissipation budget and decay to the mean.

use serde::{Deserialize, Serialize};

use crate::model::{CompiledPoly, DiffusionSpec, EntropySpec, ModelError, SqrtPrimitive};
use crate::solver::{Dynamics, Grid, PeriodicField, SolverError, Trajectory};

/// Per-step tolerance for the monotonicity audits.
pub const STEP_TOLERANCE: f64 = 1e-12;
/// Slack on the dissipation budget.
pub const DISSIPATION_SLACK: f64 = 1e-10;
/// Total variation below which a tail counts as a plateau.
pub const PLATEAU_VARIATION: f64 = 1e-6;

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Cell-measure-weighted mean of the field.
pub fn mean_value(field: &PeriodicField) -> f64 {
    mean(field.values())
}

/// `∫ eta(u) dx` on the unit torus.
pub fn entropy_integral(field: &PeriodicField, eta: &EntropySpec) -> f64 {
    let e = eta.eta().compile();
    field.values().iter().map(|&u| e.eval(u)).sum::<f64>() / field.len() as f64
}

pub fn l1_between(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// A second field or a constant.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    Field(&'a PeriodicField),
    Constant(f64),
}

/// `∫ |f - g| dx`
pub fn l1_distance(f: &PeriodicField, g: Target<'_>) -> Result<f64, SolverError> {
    match g {
        Target::Field(g) => {
            if f.grid() != g.grid() {
                return Err(SolverError::Grid("fields live on different grids".into()));
            }
            Ok(l1_between(f.values(), g.values()))
        }
        Target::Constant(c) => Ok(f.values().iter().map(|v| (v - c).abs()).sum::<f64>() / f.len() as f64),
    }
}

/// One row of the diagnostic series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub mass: f64,
    /// `∫ u²`
    pub i_eta_sq: f64,
    /// `∫ |u|`
    pub i_eta_abs: f64,
    pub l1_to_mean: f64,
    /// Absent for non-diagonal diffusion.
    pub dissipation_cum: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyAudit {
    pub label: String,
    /// Largest increase of `I_eta` over one step (nonpositive when monotone).
    pub worst_jump: f64,
}

/// Per-step audit summary of a run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StepAudit {
    pub steps: usize,
    pub mean0: f64,
    pub mass_drift: f64,
    /// Largest growth of `max u` or decrease of `min u` over one step.
    pub range_expansion: f64,
    pub entropies: Vec<EntropyAudit>,
    pub dissipation_cum: Option<f64>,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Diagonal diffusion: the scheme is monotone under the step bound.
    pub monotone_regime: bool,
}

impl StepAudit {
    pub fn entropy_worst(&self) -> f64 {
        self.entropies.iter().map(|e| e.worst_jump).fold(f64::NEG_INFINITY, f64::max)
    }
}

enum Eta {
    Square,
    Kruzhkov(f64),
    Compiled(CompiledPoly),
}

impl Eta {
    fn integral(&self, u: &[f64]) -> f64 {
        let s: f64 = match self {
            Eta::Square => u.iter().map(|v| v * v).sum(),
            Eta::Kruzhkov(k) => u.iter().map(|v| (v - k).abs()).sum(),
            Eta::Compiled(c) => u.iter().map(|&v| c.eval(v)).sum(),
        };
        s / u.len() as f64
    }
}

/// Online audits fed with every step of a run.
pub struct StepAuditor {
    grid: Grid,
    plus: Vec<Vec<usize>>,
    minus: Vec<Vec<usize>>,
    sqrt: Option<Vec<SqrtPrimitive>>,
    b_vals: Vec<Vec<f64>>,
    etas: Vec<(String, Eta)>,
    last: Vec<f64>,
    audit: StepAudit,
}

/// The Kruzhkov levels audited for data with range `[lo, hi]`.
pub fn kruzhkov_levels(lo: f64, hi: f64) -> Vec<f64> {
    (1..=5).map(|j| lo + (hi - lo) * j as f64 / 6.0).collect()
}

impl StepAuditor {
    pub fn new(dynamics: &Dynamics, u0: &PeriodicField) -> Self {
        let sqrt = dynamics.sqrt_primitives().map(|s| s.to_vec());
        Self::build(u0, sqrt, dynamics.is_diagonal())
    }

    /// Audits without dynamics, e.g. over stored frames: no dissipation.
    pub fn detached(u0: &PeriodicField, monotone_regime: bool) -> Self {
        Self::build(u0, None, monotone_regime)
    }

    fn build(u0: &PeriodicField, sqrt: Option<Vec<SqrtPrimitive>>, monotone_regime: bool) -> Self {
        let grid = u0.grid().clone();
        let n = grid.n();
        let (lo, hi) = u0.range();
        let mut etas = vec![("u^2".to_string(), Eta::Square)];
        etas.extend(kruzhkov_levels(lo, hi).into_iter().map(|k| (format!("|u-{k}|"), Eta::Kruzhkov(k))));
        let last = etas.iter().map(|(_, e)| e.integral(u0.values())).collect();
        StepAuditor {
            plus: (0..n).map(|r| (0..grid.len()).map(|k| grid.neighbour(k, r, true)).collect()).collect(),
            minus: (0..n).map(|r| (0..grid.len()).map(|k| grid.neighbour(k, r, false)).collect()).collect(),
            b_vals: vec![vec![0.0; grid.len()]; n],
            etas,
            last,
            audit: StepAudit {
                mean0: mean(u0.values()),
                entropies: Vec::new(),
                dissipation_cum: sqrt.as_ref().map(|_| 0.0),
                dt_min: f64::INFINITY,
                dt_max: 0.0,
                monotone_regime,
                ..StepAudit::default()
            },
            sqrt,
            grid,
        }
    }

    /// Adds an extra entropy to the per-step audit.
    pub fn with_entropy(mut self, label: &str, eta: &EntropySpec, u0: &PeriodicField) -> Self {
        let e = Eta::Compiled(eta.eta().compile());
        self.last.push(e.integral(u0.values()));
        self.etas.push((label.to_string(), e));
        self
    }

    /// `dt · ∫ sum_r (D_r B_r(u))²` with centred differences.
    fn dissipation(&mut self, u: &[f64], dt: f64) -> Option<f64> {
        let sqrt = self.sqrt.as_ref()?;
        let mut total = 0.0;
        for (r, b) in sqrt.iter().enumerate() {
            let vals = &mut self.b_vals[r];
            for (o, &v) in vals.iter_mut().zip(u) {
                *o = b.eval(v);
            }
            let h = self.grid.h(r);
            let s: f64 = (0..u.len())
                .map(|k| {
                    let d = (vals[self.plus[r][k]] - vals[self.minus[r][k]]) / (2.0 * h);
                    d * d
                })
                .sum();
            total += s / u.len() as f64;
        }
        Some(dt * total)
    }

    pub fn observe(&mut self, prev: &[f64], next: &[f64], dt: f64) {
        if let Some(inc) = self.dissipation(prev, dt) {
            *self.audit.dissipation_cum.get_or_insert(0.0) += inc;
        }
        let a = &mut self.audit;
        a.steps += 1;
        a.dt_min = a.dt_min.min(dt);
        a.dt_max = a.dt_max.max(dt);
        a.mass_drift = a.mass_drift.max((mean(next) - a.mean0).abs());
        let (plo, phi) = range(prev);
        let (nlo, nhi) = range(next);
        a.range_expansion = a.range_expansion.max(nhi - phi).max(plo - nlo);
        if a.entropies.is_empty() {
            a.entropies = self
                .etas
                .iter()
                .map(|(l, _)| EntropyAudit { label: l.clone(), worst_jump: f64::NEG_INFINITY })
                .collect();
        }
        for (j, (_, eta)) in self.etas.iter().enumerate() {
            let v = eta.integral(next);
            let jump = v - self.last[j];
            let e = &mut self.audit.entropies[j];
            e.worst_jump = e.worst_jump.max(jump);
            self.last[j] = v;
        }
    }

    pub fn row(&self, t: f64, u: &[f64]) -> DiagnosticsRow {
        let m0 = self.audit.mean0;
        DiagnosticsRow {
            t,
            mass: mean(u),
            i_eta_sq: Eta::Square.integral(u),
            i_eta_abs: Eta::Kruzhkov(0.0).integral(u),
            l1_to_mean: u.iter().map(|v| (v - m0).abs()).sum::<f64>() / u.len() as f64,
            dissipation_cum: self.audit.dissipation_cum,
        }
    }

    pub fn finish(self) -> StepAudit {
        let mut a = self.audit;
        if a.steps == 0 {
            a.dt_min = 0.0;
        }
        a
    }
}

fn range(u: &[f64]) -> (f64, f64) {
    u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Distances between the two members of a synchronized pair of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAudit {
    pub distances: Vec<(f64, f64)>,
    pub worst_jump: f64,
}

impl PairAudit {
    pub fn new(d0: f64) -> Self {
        PairAudit { distances: vec![(0.0, d0)], worst_jump: f64::NEG_INFINITY }
    }

    pub fn observe(&mut self, t: f64, d: f64) {
        let prev = self.distances.last().expect("seeded with the initial distance").1;
        self.worst_jump = self.worst_jump.max(d - prev);
        self.distances.push((t, d));
    }

    pub fn pass(&self) -> bool {
        self.worst_jump <= STEP_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionAudit {
    pub distances: Vec<(f64, f64)>,
    pub worst_jump: f64,
    pub pass: bool,
}

/// Largest increase of `||u1 - u2||_1` between consecutive common snapshots.
pub fn contraction_audit(a: &Trajectory, b: &Trajectory) -> Result<ContractionAudit, SolverError> {
    if a.times != b.times || a.initial().grid() != b.initial().grid() {
        return Err(SolverError::Unsynchronized);
    }
    let distances: Vec<(f64, f64)> = a
        .times
        .iter()
        .zip(a.snapshots.iter().zip(&b.snapshots))
        .map(|(&t, (x, y))| (t, l1_between(x.values(), y.values())))
        .collect();
    let worst_jump = distances.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::NEG_INFINITY, f64::max);
    let worst_jump = if worst_jump.is_finite() { worst_jump } else { 0.0 };
    Ok(ContractionAudit { distances, worst_jump, pass: worst_jump <= STEP_TOLERANCE })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipationAudit {
    pub cumulative: f64,
    /// `½ ∫ u0²`
    pub bound: f64,
    pub pass: bool,
}

pub fn dissipation_audit(traj: &Trajectory, diff: &DiffusionSpec, u0: &PeriodicField) -> Result<DissipationAudit, ModelError> {
    if !diff.is_diagonal() {
        return Err(ModelError::NotDiagonal);
    }
    let cumulative = traj.audit.dissipation_cum.ok_or(ModelError::NotDiagonal)?;
    let bound = 0.5 * Eta::Square.integral(u0.values());
    Ok(DissipationAudit { cumulative, bound, pass: cumulative <= bound + DISSIPATION_SLACK })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "decayed")]
    Decayed,
    #[serde(rename = "not-decayed")]
    NotDecayed,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Decayed => "decayed",
            Verdict::NotDecayed => "not-decayed",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub verdict: Verdict,
    pub threshold: f64,
    pub initial: f64,
    #[serde(rename = "final")]
    pub final_value: f64,
    /// Total variation of the series over the second half of the time span.
    pub tail_variation: f64,
}

/// Three-way verdict on a series `(t, ||u(t) - I||_1)`.
pub fn decay_verdict(series: &[(f64, f64)], threshold: f64) -> DecayReport {
    let initial = series.first().map_or(0.0, |p| p.1);
    let final_value = series.last().map_or(0.0, |p| p.1);
    let half = series.last().map_or(0.0, |p| p.0) / 2.0;
    let tail: Vec<f64> = series.iter().filter(|p| p.0 >= half).map(|p| p.1).collect();
    let tail_variation: f64 = tail.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let verdict = if final_value <= threshold {
        Verdict::Decayed
    } else if final_value > 0.9 * initial && tail_variation < PLATEAU_VARIATION {
        Verdict::NotDecayed
    } else {
        Verdict::Inconclusive
    };
    DecayReport { verdict, threshold, initial, final_value, tail_variation }
}

/// Decay verdict for a run towards the constant `i`.
pub fn decay_report(traj: &Trajectory, i: f64, threshold: f64) -> DecayReport {
    let series: Vec<(f64, f64)> = if i == traj.audit.mean0 {
        traj.l1_series()
    } else {
        traj.times
            .iter()
            .zip(&traj.snapshots)
            .map(|(&t, s)| (t, l1_distance(s, Target::Constant(i)).expect("constant target")))
            .collect()
    };
    decay_verdict(&series, threshold)
}

/// Everything audited about one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    #[serde(rename = "I")]
    pub i: f64,
    pub final_time: f64,
    pub steps: usize,
    pub mass_drift: f64,
    pub range_expansion: f64,
    pub entropy_monotone: Vec<EntropyAudit>,
    pub l1_series: Vec<(f64, f64)>,
    pub contraction_worst: Option<f64>,
    pub dissipation_cum: Option<f64>,
    pub dissipation_bound: f64,
    pub dissipation_pass: Option<bool>,
    pub decay: DecayReport,
    /// Mixed-derivative diffusion: monotonicity guarantees do not apply.
    pub experimental: bool,
    pub audits_pass: bool,
}

impl DiagnosticsReport {
    pub fn from_trajectory(traj: &Trajectory, threshold: f64, contraction_worst: Option<f64>) -> Self {
        let a = &traj.audit;
        let i = a.mean0;
        let bound = 0.5 * Eta::Square.integral(traj.initial().values());
        let dissipation_pass = a.dissipation_cum.map(|c| c <= bound + DISSIPATION_SLACK);
        let entropy_ok = a.entropies.iter().all(|e| e.worst_jump <= STEP_TOLERANCE);
        let audits_pass = a.mass_drift <= STEP_TOLERANCE
            && (!a.monotone_regime || (a.range_expansion <= STEP_TOLERANCE && entropy_ok))
            && dissipation_pass.unwrap_or(true)
            && contraction_worst.map_or(true, |w| w <= STEP_TOLERANCE);
        DiagnosticsReport {
            i,
            final_time: traj.final_time(),
            steps: traj.steps,
            mass_drift: a.mass_drift,
            range_expansion: a.range_expansion,
            entropy_monotone: a.entropies.clone(),
            l1_series: traj.l1_series(),
            contraction_worst,
            dissipation_cum: a.dissipation_cum,
            dissipation_bound: bound,
            dissipation_pass,
            decay: decay_report(traj, i, threshold),
            experimental: !a.monotone_regime,
            audits_pass,
        }
    }

    pub const CSV_HEADER: [&'static str; 12] = [
        "I",
        "final_time",
        "steps",
        "mass_drift",
        "range_expansion",
        "entropy_worst",
        "dissipation_cum",
        "dissipation_bound",
        "l1_initial",
        "l1_final",
        "verdict",
        "audits_pass",
    ];

    pub fn csv_row(&self) -> Vec<String> {
        let worst = self.entropy_monotone.iter().map(|e| e.worst_jump).fold(f64::NEG_INFINITY, f64::max);
        vec![
            self.i.to_string(),
            self.final_time.to_string(),
            self.steps.to_string(),
            self.mass_drift.to_string(),
            self.range_expansion.to_string(),
            if worst.is_finite() { worst.to_string() } else { String::new() },
            self.dissipation_cum.map_or_else(String::new, |d| d.to_string()),
            self.dissipation_bound.to_string(),
            self.decay.initial.to_string(),
            self.decay.final_value.to_string(),
            self.decay.verdict.to_string(),
            self.audits_pass.to_string(),
        ]
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::CSV_HEADER)?;
        out.write_record(self.csv_row())?;
        out.flush()
    }
}
