use std::fmt::Write as _;
use std::path::Path;

use serde_json::json;
use torusdecay_core::condition::{check_problem, check_strict_condition, counterexample_for, reduce, ConditionError};
use torusdecay_core::diagnostics::{decay_verdict, l1_distance, DiagnosticsReport, Target};
use torusdecay_core::lattice::dual_basis;
use torusdecay_core::model::{FluxSpec, ProblemSpec};
use torusdecay_core::rational::{format_rat, Rat};
use torusdecay_core::solver::io::{read_frames, write_diagnostics_csv, write_frame, write_snapshot_csv};
use torusdecay_core::solver::{run, run_pair, Dynamics, Grid, PeriodicField, SolverError, Trajectory};

use crate::config::{Format, Loaded};
use crate::{CliError, Outcome};

fn to_json<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn pretty<T: serde::Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("reports serialize");
    s.push(b'\n');
    s
}

fn vector(v: &[Rat]) -> String {
    format!("({})", v.iter().map(format_rat).collect::<Vec<_>>().join(", "))
}

fn condition_error(e: ConditionError) -> CliError {
    match e {
        ConditionError::ConditionHolds => CliError::NoCounterexample(e.to_string()),
        e => CliError::Input(e.to_string()),
    }
}

fn setup(e: SolverError) -> CliError {
    CliError::Setup(e.to_string())
}

pub fn cmd_check(cfg: &Loaded) -> Result<Outcome, CliError> {
    let i = cfg.mean()?;
    let report = check_problem(&cfg.spec, &i).map_err(condition_error)?;
    let strict = check_strict_condition(&cfg.spec.flux, &cfg.spec.diffusion, &cfg.spec.lattice, cfg.spec.bound())
        .map_err(condition_error)?;
    let mut summary = String::new();
    if report.holds {
        writeln!(summary, "condition holds at I = {}", format_rat(&i)).unwrap();
    } else {
        let w = report.witness.as_ref().expect("failing reports carry a witness");
        let v = report.vicinity.as_ref().expect("and a vicinity");
        writeln!(
            summary,
            "condition fails at I = {}: witness xi = {}, affine with speed {} and degenerate on [{}, {}]",
            format_rat(&i),
            vector(w),
            format_rat(report.speed.as_ref().expect("and a speed")),
            format_rat(&v[0]),
            format_rat(&v[1])
        )
        .unwrap();
    }
    writeln!(summary, "strict condition on [-M, M]: {}", if strict.holds { "holds" } else { "fails" }).unwrap();
    Ok(Outcome {
        code: if report.holds { 0 } else { 3 },
        summary,
        json: to_json(&report),
        files: vec![("condition.json".into(), pretty(&report)), ("strict.json".into(), pretty(&strict))],
    })
}

pub fn cmd_reduce(cfg: &Loaded) -> Result<Outcome, CliError> {
    let i = cfg.mean()?;
    let red = reduce(&cfg.spec, &i).map_err(condition_error)?;
    let mut follow_up = cfg.config.clone();
    follow_up.spec = red.spec().to_raw();
    follow_up.outputs.directory = None;
    let f = red.r_flags;
    let summary = format!(
        "d = {}, m = {}, c = {}, plateau [{}, {}], R1 {} R2 {} R3 {} R4 {}\n",
        red.d,
        red.m(),
        vector(&red.c),
        format_rat(&red.plateau.0),
        format_rat(&red.plateau.1),
        f.r1,
        f.r2,
        f.r3,
        f.r4
    );
    Ok(Outcome {
        code: 0,
        summary,
        json: to_json(&red),
        files: vec![("reduced.json".into(), pretty(&red)), ("reduced_config.json".into(), pretty(&follow_up))],
    })
}

/// The problem in fractional coordinates of its period lattice, on the unit torus.
fn on_unit_torus(spec: &ProblemSpec) -> Result<ProblemSpec, CliError> {
    if spec.lattice.is_standard() {
        return Ok(spec.clone());
    }
    let q = dual_basis(&spec.lattice).rows().clone();
    let input = |e: torusdecay_core::model::ModelError| CliError::Input(e.to_string());
    let flux = FluxSpec::new(q.iter().map(|row| spec.flux.dot(row)).collect(), spec.bound().clone()).map_err(input)?;
    let diff = spec.diffusion.transformed(&q).map_err(input)?;
    ProblemSpec::new(flux, diff, torusdecay_core::lattice::LatticeBasis::identity(spec.n())).map_err(input)
}

fn grid_of(cfg: &Loaded) -> Result<Grid, CliError> {
    let cells = cfg.config.grid.clone().ok_or_else(|| CliError::Input("the config needs \"grid\"".into()))?;
    Grid::new(cells).map_err(setup)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory");
    buf
}

fn trajectory_files(prefix: &str, traj: &Trajectory, cfg: &Loaded, files: &mut Vec<(String, Vec<u8>)>) {
    let outputs = &cfg.config.outputs;
    if outputs.wants(Format::Csv) {
        files.push((format!("{prefix}diagnostics.csv"), csv_bytes(|b| write_diagnostics_csv(b, &traj.diagnostics))));
        for (k, s) in traj.snapshots.iter().enumerate() {
            files.push((format!("{prefix}snapshot_{k:05}.csv"), csv_bytes(|b| write_snapshot_csv(b, s))));
        }
    }
    if outputs.wants(Format::Frames) {
        let frames = csv_bytes(|b| {
            traj.times.iter().zip(&traj.snapshots).try_for_each(|(&t, s)| write_frame(b, s, t))
        });
        files.push((format!("{prefix}trajectory.tdk"), frames));
    }
}

pub fn cmd_simulate(cfg: &Loaded, threshold: Option<f64>) -> Result<Outcome, CliError> {
    let spec = on_unit_torus(&cfg.spec)?;
    let grid = grid_of(cfg)?;
    let scheme = &cfg.config.scheme;
    scheme.validate().map_err(setup)?;
    let dynamics = Dynamics::new(&spec.flux, &spec.diffusion, scheme.lipschitz_samples).map_err(setup)?;
    let initial = cfg.config.initial.as_ref().ok_or_else(|| CliError::Input("the config needs \"initial\"".into()))?;
    let u0 = initial.sample(&grid).map_err(setup)?;
    let threshold = cfg.threshold(threshold);
    let mut files = Vec::new();
    let (traj, contraction) = match &cfg.config.paired_initial {
        Some(other) => {
            let v0 = other.sample(&grid).map_err(setup)?;
            let (a, b, pair) = run_pair(&dynamics, &u0, &v0, scheme).map_err(setup)?;
            trajectory_files("paired_", &b, cfg, &mut files);
            (a, Some(pair.worst_jump.max(0.0)))
        }
        None => (run(&dynamics, &u0, scheme).map_err(setup)?, None),
    };
    trajectory_files("", &traj, cfg, &mut files);
    let report = DiagnosticsReport::from_trajectory(&traj, threshold, contraction);
    files.push(("summary.csv".into(), csv_bytes(|b| report.write_csv(b))));
    files.push(("report.json".into(), pretty(&report)));
    let summary = format!(
        "t = {}: ||u - I||_1 = {:.6e} ({} at threshold {}), {} steps; mass drift {:.1e}, range expansion {:.1e}, audits {}\n",
        report.final_time,
        report.decay.final_value,
        report.decay.verdict,
        threshold,
        report.steps,
        report.mass_drift,
        report.range_expansion,
        if report.audits_pass { "pass" } else { "FAIL" }
    );
    Ok(Outcome { code: 0, summary, json: to_json(&report), files })
}

pub const DEFAULT_TIMES: [f64; 11] = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];

pub fn cmd_counterexample(cfg: &Loaded, times: Option<&[f64]>, threshold: Option<f64>) -> Result<Outcome, CliError> {
    let i = cfg.mean()?;
    let delta = cfg.config.counterexample.as_ref().and_then(|c| c.delta.as_ref()).map(|d| d.0.clone());
    let field = counterexample_for(&cfg.spec, &i, delta).map_err(condition_error)?;
    let times: Vec<f64> = times
        .map(<[f64]>::to_vec)
        .or_else(|| cfg.config.counterexample.as_ref().and_then(|c| c.times.clone()))
        .unwrap_or_else(|| DEFAULT_TIMES.to_vec());
    if times.is_empty() || times.windows(2).any(|w| w[0] >= w[1]) || times[0] < 0.0 {
        return Err(CliError::Input("times must be nonnegative and strictly increasing".into()));
    }
    let n = cfg.spec.n();
    let grid = match &cfg.config.grid {
        Some(cells) => Some(Grid::new(cells.clone()).map_err(|e| CliError::Input(e.to_string()))?),
        None if n == 1 => Some(Grid::new(vec![256]).expect("valid")),
        None if n == 2 => Some(Grid::new(vec![64, 64]).expect("valid")),
        None => None,
    };
    if grid.as_ref().is_some_and(|g| g.n() != n) {
        return Err(CliError::Input(format!("grid has {} axes, problem has {n}", grid.unwrap().n())));
    }
    let mut files = Vec::new();
    let mut frames = Vec::new();
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let (mean, l1) = match &grid {
            Some(g) => {
                let h: Vec<f64> = (0..n).map(|r| g.h(r)).collect();
                let u = PeriodicField::from_fn(g.clone(), |y| field.cell_average(t, y, &h)).map_err(setup)?;
                let l1 = l1_distance(&u, Target::Constant(field.mean())).expect("constant target");
                let mean = torusdecay_core::diagnostics::mean_value(&u);
                if cfg.config.outputs.wants(Format::Csv) {
                    files.push((format!("counterexample_{k:03}.csv"), csv_bytes(|b| write_snapshot_csv(b, &u))));
                }
                write_frame(&mut frames, &u, t).expect("writing to memory");
                (mean, l1)
            }
            None => (field.mean(), field.l1_to_mean()),
        };
        rows.push(json!({"t": t, "mean": mean, "l1_to_mean": l1, "analytic_l1": field.l1_to_mean()}));
        series.push((t, l1));
    }
    if grid.is_some() && cfg.config.outputs.wants(Format::Frames) {
        files.push(("counterexample.tdk".into(), frames));
    }
    let threshold = cfg.threshold(threshold);
    let decay = decay_verdict(&series, threshold);
    files.push((
        "series.csv".into(),
        csv_bytes(|b| {
            let mut w = csv::Writer::from_writer(b);
            w.write_record(["t", "mean", "l1_to_mean", "analytic_l1"])?;
            for r in &rows {
                w.write_record(["t", "mean", "l1_to_mean", "analytic_l1"].map(|c| r[c].to_string()))?;
            }
            w.flush()
        }),
    ));
    let report = json!({"field": field, "series": rows, "decay": decay});
    files.push(("report.json".into(), pretty(&report)));
    let summary = format!(
        "u = {} + {} sin(2 pi ({} . x - {} t)): ||u - I||_1 = {:.6e} analytically, {} at threshold {}\n",
        format_rat(&field.i),
        format_rat(&field.delta),
        vector(&field.xi),
        format_rat(&field.c),
        field.l1_to_mean(),
        decay.verdict,
        threshold
    );
    Ok(Outcome { code: 0, summary, json: report, files })
}

fn frames_trajectory(path: &Path) -> Result<Trajectory, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let frames = read_frames(&mut std::io::BufReader::new(file))
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let (first, _) = frames.first().ok_or_else(|| CliError::Input(format!("{}: no frames", path.display())))?;
    if frames.windows(2).any(|w| w[0].0.grid() != w[1].0.grid() || w[0].1 >= w[1].1) {
        return Err(CliError::Input(format!("{}: frames must share a grid and have increasing times", path.display())));
    }
    let mut auditor = torusdecay_core::diagnostics::StepAuditor::detached(first, true);
    let mut rows = vec![auditor.row(frames[0].1, first.values())];
    for w in frames.windows(2) {
        auditor.observe(w[0].0.values(), w[1].0.values(), w[1].1 - w[0].1);
        rows.push(auditor.row(w[1].1, w[1].0.values()));
    }
    Ok(Trajectory {
        times: frames.iter().map(|f| f.1).collect(),
        step_times: frames.iter().map(|f| f.1).collect(),
        steps: frames.len() - 1,
        snapshots: frames.into_iter().map(|f| f.0).collect(),
        diagnostics: rows,
        audit: auditor.finish(),
    })
}

pub fn cmd_diagnose(frames: &Path, paired: Option<&Path>, threshold: Option<f64>) -> Result<Outcome, CliError> {
    let traj = frames_trajectory(frames)?;
    let contraction = match paired {
        Some(p) => {
            let other = frames_trajectory(p)?;
            let audit = torusdecay_core::diagnostics::contraction_audit(&traj, &other)
                .map_err(|e| CliError::Input(e.to_string()))?;
            Some(audit.worst_jump.max(0.0))
        }
        None => None,
    };
    let threshold = threshold.unwrap_or(crate::config::DEFAULT_THRESHOLD);
    let report = DiagnosticsReport::from_trajectory(&traj, threshold, contraction);
    let summary = format!(
        "{} frames to t = {}: ||u - I||_1 = {:.6e} ({} at threshold {}); mass drift {:.1e}, audits {}\n",
        traj.times.len(),
        report.final_time,
        report.decay.final_value,
        report.decay.verdict,
        threshold,
        report.mass_drift,
        if report.audits_pass { "pass" } else { "FAIL" }
    );
    let files = vec![
        ("diagnose_summary.csv".into(), csv_bytes(|b| report.write_csv(b))),
        ("diagnose_report.json".into(), pretty(&report)),
    ];
    Ok(Outcome { code: 0, summary, json: to_json(&report), files })
}
