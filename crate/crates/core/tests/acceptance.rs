//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; the process exits nonzero if any fail.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spinebend_core::beam::{self, BeamSpec};
use spinebend_core::calibration::{
    anchor_records, anchored_model, estimate_moduli, fit_actuation, reach_anchor_records, FitOptions,
    ForceDeflectionRecord, Phase, ANCHOR_ANGLES_DEG, ANCHOR_PRESSURE, ANCHOR_REACH,
};
use spinebend_core::config::{MaterialParams, RobotGeometry};
use spinebend_core::kinematics::{bend_angle_table, GroupPressures, RobotModel};
use spinebend_core::length::{error_stats, monte_carlo, write_realizations_csv, LengthErrorModel, TRIAL_REFERENCE_CM};
use spinebend_core::planner::{plan, replay, Command, PlanRequest};
use spinebend_core::pneumatic::{step, valve_config, Event, SystemState, Valve};
use spinebend_core::scenario::{run_scenario, trajectory_csv, RunOptions, Scenario};
use spinebend_core::stiffness::{default_curve, MEASURED_MODULI};

// pinned tolerances
const ORACLE_REL: f64 = 1e-8;
const ORACLE_BUDGET: Duration = Duration::from_secs(5);
const ROUND_TRIP_REL: f64 = 1e-9;
const MODULUS_REL: f64 = 1e-6;
const ANCHOR_DEG: f64 = 0.01;
const ONE_PARAM_MAX_REL: f64 = 0.50;
const REACH_DIFF_CM: f64 = 10.36;
const REACH_MAX_REL: f64 = 0.15;
const MC_SEEDS: u64 = 10_000;
const MC_MEAN_PCT: f64 = 5.18;
const MC_MEAN_TOL_PP: f64 = 0.3;
const MC_STD_CM: f64 = 0.39;
const MC_STD_TOL_CM: f64 = 0.05;
const MC_BUDGET: Duration = Duration::from_secs(10);
const PLAN_TARGETS: usize = 200;
const PLAN_TOL: f64 = 1e-3;
const PLAN_MIN_SOLVED: f64 = 0.95;
const PLAN_BUDGET: Duration = Duration::from_secs(1);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn beam_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let e = rng.random_range(1e5..1e8);
        let l = rng.random_range(0.05..0.5);
        let r = rng.random_range(0.005..0.05);
        let f = rng.random_range(0.1..50.0);
        let x = rng.random_range(0.05..=1.0) * l;
        let spec = BeamSpec::circular(l, e, r).map_err(|e| e.to_string())?;
        let exact = beam::deflection_at(&spec, f, x).map_err(|e| e.to_string())?;
        let numeric = beam::deflection_oracle(&spec, f, x).map_err(|e| e.to_string())?;
        worst = worst.max(rel(numeric, exact));
    }
    let elapsed = start.elapsed();
    check(
        worst < ORACLE_REL && elapsed < ORACLE_BUDGET,
        format!("worst rel {worst:.2e} (< {ORACLE_REL:e}), {elapsed:.2?} (< {ORACLE_BUDGET:?})"),
    )
}

fn modulus_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let e = rng.random_range(1e5..1e8);
        let l = rng.random_range(0.05..0.5);
        let r = rng.random_range(0.005..0.05);
        let f = rng.random_range(0.1..50.0);
        let spec = BeamSpec::circular(l, e, r).map_err(|e| e.to_string())?;
        let tip = beam::tip_deflection(&spec, f).map_err(|e| e.to_string())?;
        let back = beam::modulus_from_tip(f, l, r, tip).map_err(|e| e.to_string())?;
        worst = worst.max(rel(back, e));
    }
    check(worst < ROUND_TRIP_REL, format!("worst rel {worst:.2e} (< {ROUND_TRIP_REL:e})"))
}

fn measured_moduli() -> Outcome {
    let curve = default_curve();
    let fixtures_match = curve.samples().len() == MEASURED_MODULI.len()
        && curve
            .samples()
            .iter()
            .zip(MEASURED_MODULI)
            .all(|(s, (l, e))| s.length == l && s.modulus == e && curve.modulus_at(l).ok() == Some(e));
    let radius = RobotGeometry::default().spine_radius;
    let records: Vec<ForceDeflectionRecord> = MEASURED_MODULI
        .iter()
        .map(|&(l, e)| {
            let spec = BeamSpec::circular(l, e, radius).unwrap();
            ForceDeflectionRecord {
                spine_length: l,
                force: 2.0,
                deflection: beam::tip_deflection(&spec, 2.0).unwrap(),
                phase: Phase::Loading,
            }
        })
        .collect();
    let est = estimate_moduli(&records, radius).map_err(|e| e.to_string())?;
    let worst = est
        .iter()
        .zip(MEASURED_MODULI)
        .map(|(s, (_, e))| rel(s.modulus, e))
        .fold(0.0, f64::max);
    check(
        fixtures_match && est.len() == 6 && worst < MODULUS_REL,
        format!("fixtures exact: {fixtures_match}; recovered worst rel {worst:.2e} (< {MODULUS_REL:e})"),
    )
}

fn model_with(fit: &spinebend_core::calibration::FitResult) -> RobotModel {
    RobotModel {
        geom: RobotGeometry::default(),
        mat: MaterialParams::default(),
        curve: default_curve(),
        actuation: fit.actuation(),
    }
}

fn bending_anchors() -> Outcome {
    let (geom, mat, curve) = (RobotGeometry::default(), MaterialParams::default(), default_curve());
    let two = fit_actuation(&anchor_records(), &geom, &mat, &curve, FitOptions::default()).map_err(|e| e.to_string())?;
    let model = model_with(&two);
    let p = GroupPressures::single(ANCHOR_PRESSURE).unwrap();
    let mut worst = 0.0f64;
    for (l, deg) in ANCHOR_ANGLES_DEG {
        let got = model.bend(l, &p).map_err(|e| e.to_string())?.bend_angle.to_degrees();
        worst = worst.max((got - deg).abs());
    }

    let one = fit_actuation(
        &anchor_records(),
        &geom,
        &mat,
        &curve,
        FitOptions {
            fix_rigidity_scale: true,
        },
    )
    .map_err(|e| e.to_string())?;
    let (l30, deg30) = ANCHOR_ANGLES_DEG[1];
    let pred30 = model_with(&one).bend(l30, &p).map_err(|e| e.to_string())?.bend_angle.to_degrees();
    let one_param_err = (pred30 - deg30) / deg30;

    let lengths: Vec<f64> = (0..=6).map(|i| (i * 5) as f64 / 100.0).collect();
    let pressures: Vec<f64> = (1..=5).map(|i| i as f64 * 50e3).collect();
    let table = bend_angle_table(&model, &lengths, &pressures).map_err(|e| e.to_string())?;
    let in_p = table.iter().all(|row| row.windows(2).all(|w| w[1] >= w[0]));
    let in_l = (0..pressures.len()).all(|j| table.windows(2).all(|w| w[1][j] <= w[0][j]));

    check(
        worst < ANCHOR_DEG && one_param_err.abs() < ONE_PARAM_MAX_REL && in_p && in_l,
        format!(
            "anchor error {worst:.2e} deg (< {ANCHOR_DEG}); beta=1 predicts {pred30:.2} deg at 30 cm ({:+.1}%, |.| < {:.0}%); 7x5 monotone in P: {in_p}, in L: {in_l}",
            one_param_err * 100.0,
            ONE_PARAM_MAX_REL * 100.0
        ),
    )
}

fn tip_anchors() -> Outcome {
    let (geom, mat, curve) = (RobotGeometry::default(), MaterialParams::default(), default_curve());
    let fit = fit_actuation(&reach_anchor_records(), &geom, &mat, &curve, FitOptions::default())
        .map_err(|e| e.to_string())?;
    let model = model_with(&fit);
    let p = GroupPressures::single(ANCHOR_PRESSURE).unwrap();
    let reach = |l: f64| model.tip(l, &p).map(|t| t.reach());
    let (r0, r30) = (
        reach(ANCHOR_REACH[0].0).map_err(|e| e.to_string())?,
        reach(ANCHOR_REACH[1].0).map_err(|e| e.to_string())?,
    );
    let diff_cm = (r0 - r30) * 100.0;
    let miss_cm = (diff_cm - REACH_DIFF_CM).abs();
    // reported per-record reach residuals bound the miss on the difference
    let reported_cm: f64 = fit
        .residuals
        .iter()
        .filter_map(|r| r.tip_x_error())
        .map(f64::abs)
        .sum::<f64>()
        * 100.0;
    let rel_miss = miss_cm / REACH_DIFF_CM;
    check(
        miss_cm <= reported_cm + 1e-9 && rel_miss < REACH_MAX_REL,
        format!(
            "reach difference {diff_cm:.3} cm vs {REACH_DIFF_CM} cm: miss {miss_cm:.3} cm within reported residual {reported_cm:.3} cm, {:.1}% (< {:.0}%)",
            rel_miss * 100.0,
            REACH_MAX_REL * 100.0
        ),
    )
}

fn valve_truth_table() -> Outcome {
    use Valve::{Closed, Open};
    let expected = [
        (SystemState::Idle, [Open, Closed, Open, Closed]),
        (SystemState::Growing, [Closed, Open, Open, Closed]),
        (SystemState::Jammed, [Open, Closed, Closed, Open]),
    ];
    // four valves per state: every one is asserted
    let valve_ok: usize = expected
        .iter()
        .map(|(state, valves)| {
            let got = valve_config(*state).as_array();
            got.iter().zip(valves).filter(|(a, b)| a == b).count()
        })
        .sum();
    let states = [SystemState::Idle, SystemState::Growing, SystemState::Jammed];
    let events = [Event::StartGrow, Event::Jam, Event::Release];
    let accepted: Vec<(SystemState, Event)> = states
        .iter()
        .flat_map(|&s| events.iter().map(move |&e| (s, e)))
        .filter(|&(s, e)| step(s, e).is_ok())
        .collect();
    let forward = [
        (SystemState::Idle, Event::StartGrow),
        (SystemState::Growing, Event::Jam),
        (SystemState::Jammed, Event::Release),
    ];
    check(
        valve_ok == 12 && accepted == forward,
        format!("{valve_ok}/12 valve assertions; {}/9 transitions accepted", accepted.len()),
    )
}

fn length_statistics() -> Outcome {
    let targets: Vec<f64> = TRIAL_REFERENCE_CM.iter().map(|c| c / 100.0).collect();
    let model = LengthErrorModel::default();
    let start = Instant::now();
    let runs = monte_carlo(&targets, &model, 0..MC_SEEDS).map_err(|e| e.to_string())?;
    let stats = error_stats(&runs).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mut log_a = Vec::new();
    let mut log_b = Vec::new();
    write_realizations_csv(&mut log_a, &runs).map_err(|e| e.to_string())?;
    let again = monte_carlo(&targets, &model, 0..MC_SEEDS).map_err(|e| e.to_string())?;
    write_realizations_csv(&mut log_b, &again).map_err(|e| e.to_string())?;
    let mean_pct = stats.mean_rel_error * 100.0;
    let std_cm = stats.max_std * 100.0;
    check(
        (mean_pct - MC_MEAN_PCT).abs() <= MC_MEAN_TOL_PP
            && (std_cm - MC_STD_CM).abs() <= MC_STD_TOL_CM
            && log_a == log_b
            && elapsed < MC_BUDGET,
        format!(
            "mean rel error {mean_pct:.3}% ({MC_MEAN_PCT} ± {MC_MEAN_TOL_PP}), max std {std_cm:.3} cm ({MC_STD_CM} ± {MC_STD_TOL_CM}), identical logs: {}, {elapsed:.2?} (< {MC_BUDGET:?})",
            log_a == log_b
        ),
    )
}

fn planner_round_trip() -> Outcome {
    let model = anchored_model();
    let pressure_max = 250e3;
    let targets = spinebend_core::planner::sample_targets(&model, PLAN_TARGETS, pressure_max, 8)
        .map_err(|e| e.to_string())?;
    let (mut solved, mut slowest, mut replay_failures) = (0usize, Duration::ZERO, 0usize);
    for t in &targets {
        let mut req = PlanRequest::new(t.position);
        req.tolerance = PLAN_TOL;
        req.pressure_max = pressure_max;
        let start = Instant::now();
        let result = plan(&req, &model);
        let elapsed = start.elapsed();
        slowest = slowest.max(elapsed);
        if let Ok(p) = result {
            if replay(&p.command_sequence, SystemState::Idle).is_err() {
                replay_failures += 1;
            }
            if p.tip_error < PLAN_TOL && elapsed < PLAN_BUDGET {
                solved += 1;
            }
        }
    }
    let frac = solved as f64 / PLAN_TARGETS as f64;
    check(
        frac >= PLAN_MIN_SOLVED && replay_failures == 0,
        format!(
            "{solved}/{PLAN_TARGETS} solved under 1 mm within {PLAN_BUDGET:?} each (>= {:.0}%), slowest {slowest:.2?}, replay failures {replay_failures}",
            PLAN_MIN_SOLVED * 100.0
        ),
    )
}

fn scenario_determinism() -> Outcome {
    let model = anchored_model();
    let mut details = Vec::new();
    let mut ok = true;
    for (name, decreasing) in [("fig9a", true), ("fig9b", false)] {
        let scenario = Scenario::load(name).map_err(|e| e.to_string())?;
        let run = || run_scenario(&scenario, &model, &RunOptions::default()).map_err(|e| e.to_string());
        let (a, b) = (run()?, run()?);
        let identical = trajectory_csv(&a) == trajectory_csv(&b);
        // the ramp is the sequence of pressure commands
        let ramp: Vec<f64> = scenario
            .steps
            .iter()
            .zip(&a)
            .filter(|(step, _)| matches!(step.command, Command::SetPressures(_)))
            .map(|(_, row)| row.bend_angle)
            .collect();
        let monotone = ramp.len() >= 2
            && ramp.windows(2).all(|w| if decreasing { w[1] <= w[0] } else { w[1] >= w[0] })
            && ramp.first() != ramp.last();
        ok &= identical && monotone;
        details.push(format!(
            "{name}: theta {} {}, identical logs: {identical}",
            if decreasing { "decreasing" } else { "increasing" },
            monotone
        ));
    }
    check(ok, details.join("; "))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("beam oracle equivalence", beam_oracle),
        ("modulus round trip", modulus_round_trip),
        ("measured moduli", measured_moduli),
        ("bending anchors", bending_anchors),
        ("tip-position anchors", tip_anchors),
        ("valve truth table", valve_truth_table),
        ("length-control statistics", length_statistics),
        ("planner round trip", planner_round_trip),
        ("scenario determinism", scenario_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
