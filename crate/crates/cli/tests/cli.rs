use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use torusdecay::{cmd_counterexample, cmd_simulate, Loaded};
use torusdecay_core::diagnostics::DiagnosticsReport;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], config: &Path, out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_torusdecay"));
    cmd.args(args).arg("--config").arg(config);
    if let Some(dir) = out {
        cmd.arg("--out").arg(dir);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn check_exit_codes() {
    assert_eq!(run(&["check"], &configs().join("burgers.json"), None).status.code(), Some(0));
    let out = run(&["check", "--json"], &configs().join("static.json"), None);
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["holds"], false);
}

#[test]
fn invalid_input_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let missing_flux = write_config(tmp.path(), "a.json", r#"{"spec": {"n": 1, "M": "1", "diffusion": [[["0"]]]}}"#);
    let out = run(&["check"], &missing_flux, None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("flux"));
    let non_square = write_config(
        tmp.path(),
        "b.json",
        r#"{"spec": {"n": 2, "M": "1", "flux": [["0"], ["0"]], "diffusion": [[["0"]], [["0"]]],
                     "lattice": [["1", "0"]]}}"#,
    );
    assert_eq!(run(&["check"], &non_square, None).status.code(), Some(2));
    let bad_json = write_config(tmp.path(), "c.json", "{\"spec\": ");
    let out = run(&["check"], &bad_json, None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("c.json:1:"));
}

#[test]
fn unstable_fixed_step_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "dt.json",
        r#"{"spec": {"n": 1, "M": "1", "flux": [["0", "0", "1/2"]], "diffusion": [[["1"]]]},
            "initial": {"kind": "sine", "amplitude": 0.5}, "grid": [64],
            "scheme": {"t_end": 1, "dt": 0.5}}"#,
    );
    let out = run(&["simulate"], &cfg, Some(&tmp.path().join("out")));
    assert_eq!(out.status.code(), Some(4));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn reduce_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("burgers_2d_drift.json");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run(&["reduce"], &cfg, Some(&a)).status.code(), Some(0));
    assert_eq!(run(&["reduce"], &cfg, Some(&b)).status.code(), Some(0));
    for name in ["reduced.json", "reduced_config.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    // the reduced config is itself a valid input with the same verdict
    let reduced = a.join("reduced_config.json");
    assert_eq!(run(&["check"], &reduced, None).status.code(), run(&["check"], &cfg, None).status.code());
}

#[test]
fn zero_dynamics_stays_constant() {
    let cfg = Loaded::from_path(&configs().join("zero_dynamics.json")).unwrap();
    let out = cmd_simulate(&cfg, None).unwrap();
    let report: DiagnosticsReport = serde_json::from_value(out.json).unwrap();
    assert!(report.audits_pass);
    assert_eq!(report.mass_drift, 0.0);
    let first = report.l1_series.first().unwrap().1;
    assert!(report.l1_series.iter().all(|&(_, d)| d == first));
}

#[test]
fn counterexample_at_time_zero_has_mean_i() {
    let cfg = Loaded::from_path(&configs().join("static.json")).unwrap();
    let out = cmd_counterexample(&cfg, Some(&[0.0]), None).unwrap();
    let series = out.json["series"].as_array().unwrap();
    assert_eq!(series.len(), 1);
    assert!(series[0]["mean"].as_f64().unwrap().abs() < 1e-15);
}

#[test]
fn diagnose_reads_simulated_frames() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    assert_eq!(run(&["simulate"], &configs().join("burgers_pair.json"), Some(&out)).status.code(), Some(0));
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_torusdecay"));
    let diag = cmd
        .args(["diagnose", "--json", "--frames"])
        .arg(out.join("trajectory.tdk"))
        .arg("--paired")
        .arg(out.join("paired_trajectory.tdk"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(diag.status.code(), Some(0), "{}", String::from_utf8_lossy(&diag.stderr));
    let report: serde_json::Value = serde_json::from_slice(&diag.stdout).unwrap();
    assert!(report["contraction_worst"].as_f64().unwrap() <= 1e-12);
    assert!(out.join("diagnose_summary.csv").exists());
}
