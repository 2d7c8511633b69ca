//! Runs the built binary and checks outputs and the exit-code contract.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spinebend"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_anchor_and_straight() {
    let o = run(&["simulate", "--spine-cm", "0", "--pressure-kpa", "250"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("bend angle 65.64 deg"), "{}", stdout(&o));

    let o = run(&["simulate", "--spine-cm", "0", "--pressure-kpa", "0"]);
    assert!(stdout(&o).contains("bend angle 0 deg"));
    assert!(stdout(&o).contains("tip (0, 0, 40.00) cm"));
}

#[test]
fn simulate_table_is_monotone() {
    let o = run(&["simulate", "--table"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| r.len() == 5 && r.windows(2).all(|w| w[1] >= w[0])));
    for j in 0..5 {
        assert!(rows.windows(2).all(|w| w[1][j] <= w[0][j]));
    }
}

#[test]
fn simulate_rejects_overpressure() {
    let o = run(&["simulate", "--pressure-kpa", "350"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_svg_has_one_polyline() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("bend.svg");
    let o = run(&["simulate", "--spine-cm", "20", "--pressure-kpa", "250", "--svg", svg.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(svg).unwrap();
    assert_eq!(text.matches("<polyline").count(), 1);
}

#[test]
fn calibrate_writes_curve_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cal");
    let o = run(&[
        "calibrate",
        "--spine-csv",
        data("spine_force_deflection.csv").to_str().unwrap(),
        "--bending-csv",
        data("anchor_bending.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let curve = std::fs::read_to_string(out.join("stiffness_curve.csv")).unwrap();
    assert!(curve.starts_with("length_cm,modulus_kpa\n5,318"));
    assert!(out.join("actuation_fit.csv").exists());
    assert!(stdout(&o).contains("rigidity scale"));

    // the calibrated model is loadable
    let o = run(&[
        "simulate",
        "--spine-cm",
        "30",
        "--pressure-kpa",
        "250",
        "--calibration",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn calibrate_missing_file_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "calibrate",
        "--spine-csv",
        "/definitely/not/here.csv",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/definitely/not/here.csv"));
}

#[test]
fn plan_round_trip_and_emitted_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let scn = dir.path().join("plan.scn");
    let o = run(&[
        "plan",
        "--target-cm",
        "10.64",
        "6.140",
        "37.12",
        "--tol-mm",
        "1",
        "--emit-scenario",
        scn.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let script = std::fs::read_to_string(&scn).unwrap();
    assert!(script.starts_with("t0.0 start_grow\n"));
    let log = dir.path().join("plan.csv");
    let o = run(&[
        "run-scenario",
        "--scenario",
        scn.to_str().unwrap(),
        "--out",
        log.to_str().unwrap(),
        "--ideal",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn plan_unreachable_exits_3() {
    let o = run(&["plan", "--target-cm", "0", "0", "45"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("best residual"));
}

#[test]
fn scenario_logs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let svg = dir.path().join("a.svg");
    for (out, extra) in [(&a, Some(&svg)), (&b, None)] {
        let mut args = vec!["run-scenario", "--scenario", "fig9a", "--seed", "7", "--out", out.to_str().unwrap()];
        if let Some(s) = extra {
            args.extend(["--svg", s.to_str().unwrap()]);
        }
        assert!(run(&args).status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let text = std::fs::read_to_string(&a).unwrap();
    assert!(text.starts_with("t_s,state,v1,v2,v3,v4,setpoint_kpa,"));
    assert_eq!(std::fs::read_to_string(svg).unwrap().matches("<polyline").count(), 1);
}

#[test]
fn scenario_sequence_violation_exits_4_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let scn = dir.path().join("bad.scn");
    std::fs::write(&scn, "# jam first\nt0.0 set_pressures 50 0 0\nt1.0 jam\nt2.0 wait\n").unwrap();
    let o = run(&[
        "run-scenario",
        "--scenario",
        scn.to_str().unwrap(),
        "--out",
        dir.path().join("log.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn scenario_parse_error_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let scn = dir.path().join("bad.scn");
    std::fs::write(&scn, "t0.0 fly\n").unwrap();
    let o = run(&[
        "run-scenario",
        "--scenario",
        scn.to_str().unwrap(),
        "--out",
        dir.path().join("log.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_changes_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("robot.cfg");
    std::fs::write(&cfg, "body_length_cm = 30\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "simulate", "--pressure-kpa", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("tip (0, 0, 30.00) cm"));

    std::fs::write(&cfg, "body_length_cm = banana\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "simulate"]);
    assert_eq!(o.status.code(), Some(2));
}
