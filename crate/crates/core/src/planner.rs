//! Inverse configuration: find a spine length and chamber pressures that put
//! the tip on a target, then turn the result into a command sequence.
//!
//! Search space is (spine length, resultant pressure magnitude, bend plane).
//! A coarse grid seeds a handful of pattern-search refinements; the best
//! refined candidate wins, ties going to the shorter spine and then to the
//! lower total pressure.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::kinematics::{GroupPressures, RobotModel, TipPose};
use crate::length::{simulate_growth, LengthErrorModel};
use crate::pneumatic::{self, Event, SystemState};
use crate::stiffness::MEASURED_MODULI;

const SEEDS_REFINED: usize = 5;
const MAX_ITERATIONS: usize = 200;
const MIN_STEP: f64 = 1e-5;
/// Bend-angle constraint violation is charged at this many meters per radian.
const ANGLE_PENALTY: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct AngleConstraint {
    pub angle: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanRequest {
    pub target: [f64; 3],
    pub tolerance: f64,
    pub angle_constraint: Option<AngleConstraint>,
    pub pressure_max: f64,
    pub spine_grid: Vec<f64>,
    pub pressure_steps: usize,
    pub phi_steps: usize,
}

impl PlanRequest {
    pub fn new(target: [f64; 3]) -> Self {
        Self {
            target,
            tolerance: 0.005,
            angle_constraint: None,
            pressure_max: 250_000.0,
            spine_grid: (0..=6).map(|i| (i * 5) as f64 / 100.0).collect(),
            pressure_steps: 26,
            phi_steps: 12,
        }
    }

    fn validate(&self, model: &RobotModel) -> Result<()> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::validation("tolerance", "must be positive"));
        }
        if self.spine_grid.is_empty() || self.pressure_steps < 2 || self.phi_steps == 0 {
            return Err(Error::validation("grid", "search grids must be nonempty"));
        }
        if let Some(&bad) = self
            .spine_grid
            .iter()
            .find(|&&l| !(0.0..=model.geom.spine_max_length).contains(&l))
        {
            return Err(Error::validation("spine_grid", format!("{bad} m out of range")));
        }
        if !(self.pressure_max > 0.0 && self.pressure_max <= crate::kinematics::PRESSURE_LIMIT) {
            return Err(Error::validation("pressure_max", "must be in (0, 300] kPa"));
        }
        if self.target.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("target", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    Event(Event),
    GrowTo(f64),
    SetPressures(GroupPressures),
    Wait,
}

impl fmt::Display for Command {
    /// Scenario-script form: lengths in cm, pressures in kPa.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Event(e) => write!(f, "{e}"),
            Command::GrowTo(l) => write!(f, "grow_to {}", l * 100.0),
            Command::SetPressures(p) => write!(
                f,
                "set_pressures {} {} {}",
                p.0[0] / 1000.0,
                p.0[1] / 1000.0,
                p.0[2] / 1000.0
            ),
            Command::Wait => f.write_str("wait"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub spine_length: f64,
    pub pressures: GroupPressures,
    pub bend_angle: f64,
    pub predicted_tip: [f64; 3],
    pub tip_error: f64,
    /// Spine length falls between characterized lengths.
    pub interpolated: bool,
    pub command_sequence: Vec<Command>,
}

/// Grow, jam, then pressurize. A robot without spine only needs pressures.
pub fn command_sequence(spine_length: f64, pressures: GroupPressures) -> Vec<Command> {
    if spine_length > 0.0 {
        vec![
            Command::Event(Event::StartGrow),
            Command::GrowTo(spine_length),
            Command::Event(Event::Jam),
            Command::SetPressures(pressures),
        ]
    } else {
        vec![Command::SetPressures(pressures)]
    }
}

/// Rewrites every `GrowTo` so the expected realized length equals the
/// planned one under `lengths`' bias.
pub fn compensate_growth(commands: &[Command], lengths: &LengthErrorModel) -> Vec<Command> {
    commands
        .iter()
        .map(|c| match *c {
            Command::GrowTo(l) => Command::GrowTo(lengths.compensated_command(l)),
            other => other,
        })
        .collect()
}

/// Replays the events of a command list from `start`, checking that length
/// changes only happen while growing. Returns the final state.
pub fn replay(commands: &[Command], start: SystemState) -> Result<SystemState> {
    let mut state = start;
    for cmd in commands {
        match *cmd {
            Command::Event(e) => state = pneumatic::step(state, e)?,
            Command::GrowTo(_) if !pneumatic::may_change_length(state) => {
                return Err(Error::domain(format!("cannot change spine length while {state}")))
            }
            _ => {}
        }
    }
    Ok(state)
}

/// Scenario script: one `t<seconds> <command>` line per command, 1 s apart,
/// followed by a final `wait`.
pub fn scenario_script(commands: &[Command]) -> String {
    let mut out = String::new();
    for (i, c) in commands.iter().chain(std::iter::once(&Command::Wait)).enumerate() {
        out.push_str(&format!("t{}.0 {c}\n", i));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudPoint {
    pub spine_length: f64,
    /// Resultant pressure magnitude, Pa.
    pub pressure: f64,
    pub phi: f64,
    pub tip: [f64; 3],
    pub bend_angle: f64,
}

fn pressures_for(pressure: f64, phi: f64) -> GroupPressures {
    GroupPressures::from_polar(pressure, phi)
}

/// Between group axes one group carries more than the resultant, so the cap
/// is applied per group by shrinking the resultant. Returns the (possibly
/// reduced) resultant magnitude and the group pressures.
fn capped_pressures(pressure: f64, phi: f64, cap: f64) -> (f64, GroupPressures) {
    let groups = pressures_for(pressure, phi);
    let peak = groups.max();
    if peak <= cap {
        return (pressure, groups);
    }
    (
        pressure * cap / peak,
        GroupPressures(groups.0.map(|v| (v * cap / peak).min(cap))),
    )
}

/// Forward model over every (spine, pressure, φ) grid point.
pub fn workspace_cloud(
    model: &RobotModel,
    spine_lengths: &[f64],
    pressures: &[f64],
    phis: &[f64],
) -> Result<Vec<CloudPoint>> {
    workspace_cloud_with(Execution::default(), model, spine_lengths, pressures, phis)
}

pub fn workspace_cloud_with(
    exec: Execution,
    model: &RobotModel,
    spine_lengths: &[f64],
    pressures: &[f64],
    phis: &[f64],
) -> Result<Vec<CloudPoint>> {
    let (np, nf) = (pressures.len(), phis.len());
    let n = spine_lengths.len() * np * nf;
    exec::map_range(exec, n, |idx| {
        let l = spine_lengths[idx / (np * nf)];
        let p = pressures[(idx / nf) % np];
        let phi = phis[idx % nf];
        let cfg = model.bend(l, &pressures_for(p, phi))?;
        let tip = crate::kinematics::forward_kinematics(&cfg, &model.geom);
        Ok(CloudPoint {
            spine_length: l,
            pressure: p,
            phi,
            tip: tip.position,
            bend_angle: cfg.bend_angle,
        })
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    spine_length: f64,
    pressure: f64,
    groups: GroupPressures,
    phi: f64,
    tip: [f64; 3],
    bend_angle: f64,
    tip_error: f64,
    objective: f64,
}

struct Search<'a> {
    model: &'a RobotModel,
    request: &'a PlanRequest,
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

impl Search<'_> {
    fn angle_violation(&self, angle: f64) -> f64 {
        self.request
            .angle_constraint
            .as_ref()
            .map_or(0.0, |c| ((angle - c.angle).abs() - c.tolerance).max(0.0))
    }

    fn evaluate(&self, spine_length: f64, pressure: f64, phi: f64) -> Candidate {
        let phi = phi.rem_euclid(2.0 * PI);
        let (pressure, groups) = capped_pressures(pressure, phi, self.request.pressure_max);
        let cfg = self
            .model
            .bend(spine_length, &groups)
            .expect("search stays inside the model domain");
        let tip = crate::kinematics::forward_kinematics(&cfg, &self.model.geom).position;
        let tip_error = distance(&tip, &self.request.target);
        Candidate {
            spine_length,
            pressure,
            groups,
            phi,
            tip,
            bend_angle: cfg.bend_angle,
            tip_error,
            objective: tip_error + ANGLE_PENALTY * self.angle_violation(cfg.bend_angle),
        }
    }

    fn seeds(&self, exec: Execution) -> Vec<Candidate> {
        let r = self.request;
        let np = r.pressure_steps;
        let nf = r.phi_steps;
        let n = r.spine_grid.len() * np * nf;
        let mut all = exec::map_range(exec, n, |idx| {
            let l = r.spine_grid[idx / (np * nf)];
            let p = r.pressure_max * ((idx / nf) % np) as f64 / (np - 1) as f64;
            let phi = 2.0 * PI * (idx % nf) as f64 / nf as f64;
            self.evaluate(l, p, phi)
        });
        all.sort_by(better);
        all
    }

    /// Pattern search with halving steps over (spine, p·cos φ, p·sin φ);
    /// the Cartesian pressure coordinates avoid the φ degeneracy at p = 0.
    fn refine(&self, seed: Candidate) -> Candidate {
        let r = self.request;
        let max_spine = self.model.geom.spine_max_length;
        let reach_scale = self.model.geom.body_length;
        let mut best = seed;
        let mut steps = [0.025, r.pressure_max / 20.0, r.pressure_max / 20.0];
        // step sizes expressed as tip displacement, m
        let metric = [1.0, reach_scale / r.pressure_max, reach_scale / r.pressure_max];
        for _ in 0..MAX_ITERATIONS {
            if steps.iter().zip(metric).all(|(s, m)| s * m < MIN_STEP) {
                break;
            }
            let mut improved = false;
            for axis in 0..3 {
                for dir in [1.0, -1.0] {
                    let mut x = [
                        best.spine_length,
                        best.pressure * best.phi.cos(),
                        best.pressure * best.phi.sin(),
                    ];
                    x[axis] += dir * steps[axis];
                    let spine = x[0].clamp(0.0, max_spine);
                    let pressure = x[1].hypot(x[2]).min(r.pressure_max);
                    let phi = if pressure > 0.0 { x[2].atan2(x[1]) } else { best.phi };
                    let trial = self.evaluate(spine, pressure, phi);
                    if trial.objective < best.objective {
                        best = trial;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                steps.iter_mut().for_each(|s| *s *= 0.5);
            }
        }
        best
    }
}

/// Objective first; near-ties go to shorter spines, then lower pressure.
fn better(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    const TIE: f64 = 1e-9;
    if (a.objective - b.objective).abs() > TIE {
        return a.objective.total_cmp(&b.objective);
    }
    a.spine_length
        .total_cmp(&b.spine_length)
        .then(a.pressure.total_cmp(&b.pressure))
        .then(a.phi.total_cmp(&b.phi))
}

pub fn plan(request: &PlanRequest, model: &RobotModel) -> Result<Plan> {
    plan_with(Execution::default(), request, model)
}

pub fn plan_with(exec: Execution, request: &PlanRequest, model: &RobotModel) -> Result<Plan> {
    request.validate(model)?;
    let norm = request.target.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > model.geom.body_length + request.tolerance {
        return Err(Error::Unreachable {
            best_residual: norm - model.geom.body_length,
        });
    }
    let search = Search { model, request };
    let seeds = search.seeds(exec);
    let mut refined: Vec<Candidate> = seeds
        .iter()
        .take(SEEDS_REFINED)
        .map(|&s| search.refine(s))
        .collect();
    refined.sort_by(better);
    let best = refined[0];
    let feasible = best.tip_error <= request.tolerance && search.angle_violation(best.bend_angle) == 0.0;
    if !feasible {
        return Err(Error::Unreachable {
            best_residual: best.objective,
        });
    }
    let pressures = best.groups;
    Ok(Plan {
        spine_length: best.spine_length,
        pressures,
        bend_angle: best.bend_angle,
        predicted_tip: best.tip,
        tip_error: best.tip_error,
        interpolated: best.spine_length > 0.0
            && !MEASURED_MODULI
                .iter()
                .any(|&(l, _)| (l - best.spine_length).abs() < 1e-9),
        command_sequence: command_sequence(best.spine_length, pressures),
    })
}

/// Spread of the tip when the planned spine length is grown through the
/// stochastic length model (realized length clipped to the drive range).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TipDispersion {
    pub mean_tip: [f64; 3],
    /// RMS distance from the mean tip, m.
    pub rms_spread: f64,
    /// Mean distance from the planned tip, m.
    pub mean_offset: f64,
}

pub fn tip_dispersion(
    plan: &Plan,
    model: &RobotModel,
    lengths: &LengthErrorModel,
    samples: usize,
    seed: u64,
) -> Result<TipDispersion> {
    if samples == 0 {
        return Err(Error::domain("dispersion needs at least one sample"));
    }
    let tips: Vec<[f64; 3]> = exec::map_range(Execution::default(), samples, |i| {
        let realized = if plan.spine_length > 0.0 {
            simulate_growth(plan.spine_length, lengths, seed.wrapping_add(i as u64))?
                .realized
                .min(model.geom.spine_max_length)
        } else {
            0.0
        };
        Ok(model.tip(realized, &plan.pressures)?.position)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let n = tips.len() as f64;
    let mut mean = [0.0; 3];
    for t in &tips {
        for k in 0..3 {
            mean[k] += t[k] / n;
        }
    }
    let rms_spread = (tips.iter().map(|t| distance(t, &mean).powi(2)).sum::<f64>() / n).sqrt();
    let mean_offset = tips.iter().map(|t| distance(t, &plan.predicted_tip)).sum::<f64>() / n;
    Ok(TipDispersion {
        mean_tip: mean,
        rms_spread,
        mean_offset,
    })
}

/// `count` reachable targets drawn uniformly over spine length, pressure
/// magnitude and bend plane; no group exceeds `pressure_max`.
pub fn sample_targets(model: &RobotModel, count: usize, pressure_max: f64, seed: u64) -> Result<Vec<TipPose>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let l = rng.random_range(0.0..=model.geom.spine_max_length);
            let p = rng.random_range(0.0..=pressure_max);
            let phi = rng.random_range(0.0..2.0 * PI);
            model.tip(l, &capped_pressures(p, phi, pressure_max).1)
        })
        .collect()
}

/// `spine_length_cm,p1_kpa,p2_kpa,p3_kpa,tip_x_cm,tip_y_cm,tip_z_cm,tip_error_mm`.
pub fn plan_csv(plan: &Plan) -> String {
    let p = plan.pressures.0;
    let t = plan.predicted_tip;
    format!(
        "spine_length_cm,p1_kpa,p2_kpa,p3_kpa,tip_x_cm,tip_y_cm,tip_z_cm,tip_error_mm\n{},{},{},{},{},{},{},{}\n",
        plan.spine_length * 100.0,
        p[0] / 1000.0,
        p[1] / 1000.0,
        p[2] / 1000.0,
        t[0] * 100.0,
        t[1] * 100.0,
        t[2] * 100.0,
        plan.tip_error * 1000.0
    )
}
