//! Timed command scripts replayed through the state machine, the length
//! drive and the forward model.
//!
//! Script format, one command per line (`#` starts a comment):
//!
//! ```text
//! t0.0 start_grow
//! t1.0 grow_to 20            # cm
//! t5.0 jam
//! t6.0 set_pressures 250 0 0 # kPa per chamber group
//! t8.0 wait
//! ```
//!
//! The spine only stiffens the body while jammed; in the other states the
//! robot bends as if it had no spine.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, GroupPressures, RobotModel, PRESSURE_LIMIT};
use crate::length::{simulate_growth, LengthErrorModel};
use crate::planner::Command;
use crate::pneumatic::{self, Event, StateMachine, SystemState};
use crate::svg::SvgPlot;

pub const BUNDLED: [(&str, &str); 4] = [
    ("fig9a", include_str!("../scenarios/fig9a.scn")),
    ("fig9b", include_str!("../scenarios/fig9b.scn")),
    ("fig9c", include_str!("../scenarios/fig9c.scn")),
    ("fig9d", include_str!("../scenarios/fig9d.scn")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioStep {
    pub t: f64,
    /// 1-based line in the script.
    pub line: usize,
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub steps: Vec<ScenarioStep>,
}

impl Scenario {
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let mut steps: Vec<ScenarioStep> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| Error::Scenario { line, message };
            let mut words = content.split_whitespace();
            let stamp = words.next().unwrap_or_default();
            let t: f64 = stamp
                .strip_prefix('t')
                .and_then(|v| v.parse().ok())
                .filter(|v: &f64| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| err(format!("bad timestamp `{stamp}`, expected t<seconds>")))?;
            if let Some(prev) = steps.last() {
                if t < prev.t {
                    return Err(err(format!("time {t} s goes backwards from {} s", prev.t)));
                }
            }
            let verb = words
                .next()
                .ok_or_else(|| err("missing command".to_string()))?;
            let args: Vec<f64> = words
                .map(|w| w.parse::<f64>().map_err(|_| err(format!("`{w}` is not a number"))))
                .collect::<Result<_>>()?;
            let arity = |n: usize| {
                if args.len() == n {
                    Ok(())
                } else {
                    Err(err(format!("`{verb}` takes {n} argument(s), got {}", args.len())))
                }
            };
            let command = match verb {
                "grow_to" => {
                    arity(1)?;
                    if args[0].is_nan() || args[0] < 0.0 {
                        return Err(err(format!("negative length {}", args[0])));
                    }
                    Command::GrowTo(args[0] / 100.0)
                }
                "set_pressures" => {
                    arity(3)?;
                    let p = GroupPressures([args[0] * 1000.0, args[1] * 1000.0, args[2] * 1000.0]);
                    p.validate(PRESSURE_LIMIT).map_err(|e| err(e.to_string()))?;
                    Command::SetPressures(p)
                }
                "wait" => {
                    arity(0)?;
                    Command::Wait
                }
                other => {
                    arity(0)?;
                    Command::Event(other.parse::<Event>().map_err(err)?)
                }
            };
            steps.push(ScenarioStep { t, line, command });
        }
        Ok(Self {
            name: name.to_string(),
            steps,
        })
    }

    /// A bundled name or a path to a script file.
    pub fn load(name_or_path: &str) -> Result<Self> {
        if let Some(text) = bundled(name_or_path) {
            return Self::parse(name_or_path, text);
        }
        let path = Path::new(name_or_path);
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map_or_else(|| name_or_path.to_string(), |s| s.to_string_lossy().into_owned());
        Self::parse(&name, &text)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOptions {
    pub seed: u64,
    pub lengths: LengthErrorModel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub state: SystemState,
    /// Deployed spine length, m.
    pub spine_length: f64,
    pub pressures: GroupPressures,
    pub bend_angle: f64,
    pub tip: [f64; 3],
}

impl TrajectoryRow {
    /// Length that stiffens the body at this row.
    pub fn jammed_length(&self) -> f64 {
        if self.state == SystemState::Jammed {
            self.spine_length
        } else {
            0.0
        }
    }
}

/// Replay a scenario. Sequence violations are reported with their line.
pub fn run_scenario(scenario: &Scenario, model: &RobotModel, options: &RunOptions) -> Result<Vec<TrajectoryRow>> {
    let mut sm = StateMachine::new();
    let mut spine_length = 0.0;
    let mut pressures = GroupPressures::zero();
    let mut rows = Vec::with_capacity(scenario.steps.len());
    let max_length = model.geom.spine_max_length.min(options.lengths.max_length);

    for (i, step) in scenario.steps.iter().enumerate() {
        let at_line = |source: Error| Error::Replay {
            line: step.line,
            source: Box::new(source),
        };
        match step.command {
            Command::Event(e) => {
                sm.apply(e).map_err(at_line)?;
            }
            Command::GrowTo(target) => {
                if !pneumatic::may_change_length(sm.state()) {
                    return Err(at_line(Error::domain(format!(
                        "spine length can only change while growing (state is {})",
                        sm.state()
                    ))));
                }
                spine_length = if target == 0.0 {
                    0.0
                } else {
                    let seed = options.seed.wrapping_add(i as u64);
                    let realized = simulate_growth(target, &options.lengths, seed)
                        .map_err(at_line)?
                        .realized;
                    if realized > max_length {
                        log::info!(
                            "line {}: realized length {realized} m clipped to {max_length} m",
                            step.line
                        );
                    }
                    realized.min(max_length)
                };
            }
            Command::SetPressures(p) => pressures = p,
            Command::Wait => {}
        }
        let jammed = if sm.state() == SystemState::Jammed {
            spine_length
        } else {
            0.0
        };
        let cfg = model.bend(jammed, &pressures).map_err(at_line)?;
        let tip = forward_kinematics(&cfg, &model.geom);
        rows.push(TrajectoryRow {
            t: step.t,
            state: sm.state(),
            spine_length,
            pressures,
            bend_angle: cfg.bend_angle,
            tip: tip.position,
        });
    }
    Ok(rows)
}

pub const LOG_HEADER: &str = "t_s,state,v1,v2,v3,v4,setpoint_kpa,spine_length_cm,p1_kpa,p2_kpa,p3_kpa,theta_deg,tip_x_cm,tip_y_cm,tip_z_cm";

/// Trajectory CSV at full precision. The tip's y column is the lateral
/// out-of-plane axis; z is height along the undeformed body.
pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = String::from(LOG_HEADER);
    out.push('\n');
    for r in rows {
        let p = r.pressures.0;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            pneumatic::log_row(r.t, r.state),
            r.spine_length * 100.0,
            p[0] / 1000.0,
            p[1] / 1000.0,
            p[2] / 1000.0,
            r.bend_angle.to_degrees(),
            r.tip[0] * 100.0,
            r.tip[1] * 100.0,
            r.tip[2] * 100.0
        );
    }
    out
}

/// Tip path in the (reach, height) plane, in cm.
pub fn tip_path_svg(name: &str, rows: &[TrajectoryRow]) -> String {
    let mut plot = SvgPlot::new(&format!("tip path: {name}"), "reach (cm)", "height (cm)");
    plot.add_polyline(
        name,
        rows.iter()
            .map(|r| (r.tip[0].hypot(r.tip[1]) * 100.0, r.tip[2] * 100.0))
            .collect(),
    );
    plot.render()
}
