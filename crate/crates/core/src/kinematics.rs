//! Pressure → moment → piecewise-constant-curvature shape → tip pose.
//!
//! The three chamber groups sit 120° apart. Their pressures combine into a
//! single bending moment acting in one plane, constant along the body. Each
//! rigidity segment then bends as a circular arc with κ = M / EI, and the arcs
//! are chained from the base.
//!
//! Frame: z runs along the undeformed body, x lies in the bend plane of
//! group 1 (φ = 0).

use std::f64::consts::PI;

use crate::config::{MaterialParams, RobotGeometry};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::stiffness::{rigidity_profile, StiffnessCurve};

/// Upper bound accepted for any group pressure, Pa.
pub const PRESSURE_LIMIT: f64 = 300_000.0;

/// Below this |κ·l| an arc is evaluated by its Taylor expansion.
const SMALL_ARC: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroupPressures(pub [f64; 3]);

impl GroupPressures {
    pub fn new(p1: f64, p2: f64, p3: f64) -> Result<Self> {
        let p = Self([p1, p2, p3]);
        p.validate(PRESSURE_LIMIT)?;
        Ok(p)
    }

    pub fn zero() -> Self {
        Self([0.0; 3])
    }

    /// Group 1 only.
    pub fn single(p: f64) -> Result<Self> {
        Self::new(p, 0.0, 0.0)
    }

    pub fn validate(&self, limit: f64) -> Result<()> {
        for (i, &p) in self.0.iter().enumerate() {
            if !(p.is_finite() && (0.0..=limit).contains(&p)) {
                return Err(Error::domain(format!(
                    "group {} pressure {p} Pa outside [0, {limit}] Pa",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Cheapest non-negative group pressures whose resultant has magnitude
    /// `magnitude` at azimuth `phi`: at most two adjacent groups are active.
    pub fn from_polar(magnitude: f64, phi: f64) -> Self {
        let sector = 2.0 * PI / 3.0;
        let phi = phi.rem_euclid(2.0 * PI);
        let k = ((phi / sector).floor() as usize).min(2);
        let local = phi - k as f64 * sector;
        // Solve a·e_k + b·e_{k+1} = m·(cos φ, sin φ) with e's 120° apart.
        let s = sector.sin();
        let a = magnitude * (sector - local).sin() / s;
        let b = magnitude * local.sin() / s;
        let mut p = [0.0; 3];
        p[k] = a.max(0.0);
        p[(k + 1) % 3] = b.max(0.0);
        Self(p)
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    /// Resultant pressure vector in the base plane.
    pub fn resultant(&self) -> (f64, f64) {
        self.0
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(x, y), (k, &p)| {
                let alpha = group_azimuth(k);
                (x + p * alpha.cos(), y + p * alpha.sin())
            })
    }
}

/// Azimuth of chamber group `k` (0-based).
pub fn group_azimuth(k: usize) -> f64 {
    2.0 * PI * k as f64 / 3.0
}

/// Calibrated pressure-to-bending parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuationModel {
    /// Bending moment per pascal of resultant pressure, N·m/Pa.
    pub moment_gain: f64,
    /// Multiplier on the silicone body rigidity.
    pub rigidity_scale: f64,
}

impl ActuationModel {
    pub fn new(moment_gain: f64, rigidity_scale: f64) -> Result<Self> {
        if !(moment_gain.is_finite() && moment_gain > 0.0) {
            return Err(Error::validation("moment_gain", format!("must be positive, got {moment_gain}")));
        }
        if !(rigidity_scale.is_finite() && rigidity_scale > 0.0) {
            return Err(Error::validation(
                "rigidity_scale",
                format!("must be positive, got {rigidity_scale}"),
            ));
        }
        Ok(Self {
            moment_gain,
            rigidity_scale,
        })
    }
}

/// Returns (M, φ). Equal pressures cancel and give M = 0, φ = 0.
pub fn effective_moment(p: &GroupPressures, model: &ActuationModel) -> Result<(f64, f64)> {
    p.validate(PRESSURE_LIMIT)?;
    let (x, y) = p.resultant();
    let magnitude = x.hypot(y);
    // Rounding in the cos/sin of 120° leaves ~1e-11 Pa for equal pressures.
    if magnitude <= 1e-9 * p.max().max(1.0) {
        return Ok((0.0, 0.0));
    }
    Ok((model.moment_gain * magnitude, y.atan2(x)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub length: f64,
    pub curvature: f64,
}

impl Arc {
    pub fn angle(&self) -> f64 {
        self.length * self.curvature
    }

    /// In-plane (lateral, axial) displacement of the arc end in the arc's own
    /// frame. Continuous through κ = 0.
    pub fn chord(&self) -> (f64, f64) {
        let l = self.length;
        let t = self.angle();
        if t.abs() < SMALL_ARC {
            (l * (t / 2.0 - t * t * t / 24.0), l * (1.0 - t * t / 6.0))
        } else {
            let k = self.curvature;
            (2.0 * (t / 2.0).sin().powi(2) / k, t.sin() / k)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BendConfig {
    pub spine_length: f64,
    pub pressures: GroupPressures,
    pub moment: f64,
    pub bend_plane: f64,
    pub arcs: Vec<Arc>,
    pub bend_angle: f64,
}

impl BendConfig {
    pub fn total_length(&self) -> f64 {
        self.arcs.iter().map(|a| a.length).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TipPose {
    pub position: [f64; 3],
    pub tangent: [f64; 3],
}

impl TipPose {
    /// Distance from the base axis, in the bend plane.
    pub fn reach(&self) -> f64 {
        self.position[0].hypot(self.position[1])
    }
}

pub fn bend_config(
    geom: &RobotGeometry,
    mat: &MaterialParams,
    curve: &StiffnessCurve,
    model: &ActuationModel,
    spine_length: f64,
    pressures: &GroupPressures,
) -> Result<BendConfig> {
    let (moment, bend_plane) = effective_moment(pressures, model)?;
    let profile = rigidity_profile(geom, mat, curve, spine_length)?;
    let arcs: Vec<Arc> = profile
        .segments
        .iter()
        .map(|seg| Arc {
            length: seg.len(),
            curvature: moment / seg.scaled_ei(model.rigidity_scale),
        })
        .collect();
    let bend_angle = arcs.iter().map(Arc::angle).sum();
    Ok(BendConfig {
        spine_length,
        pressures: *pressures,
        moment,
        bend_plane,
        arcs,
        bend_angle,
    })
}

/// Planar (lateral, axial, tangent angle) after chaining the arcs.
fn planar_tip(arcs: &[Arc]) -> (f64, f64, f64) {
    arcs.iter().fold((0.0, 0.0, 0.0), |(r, z, a), arc| {
        let (dx, dz) = arc.chord();
        let (s, c) = a.sin_cos();
        (r + dx * c + dz * s, z - dx * s + dz * c, a + arc.angle())
    })
}

fn lift(r: f64, z: f64, phi: f64) -> [f64; 3] {
    let (s, c) = phi.sin_cos();
    [r * c, r * s, z]
}

pub fn forward_kinematics(config: &BendConfig, geom: &RobotGeometry) -> TipPose {
    debug_assert!((config.total_length() - geom.body_length).abs() < 1e-9);
    let (r, z, a) = planar_tip(&config.arcs);
    let (s, c) = a.sin_cos();
    TipPose {
        position: lift(r, z, config.bend_plane),
        tangent: lift(s, c, config.bend_plane),
    }
}

/// Backbone points from base to tip, `per_arc` samples per arc (plus the base).
pub fn backbone(config: &BendConfig, per_arc: usize) -> Vec<[f64; 3]> {
    let per_arc = per_arc.max(1);
    let mut points = vec![[0.0; 3]];
    let (mut r, mut z, mut a) = (0.0f64, 0.0f64, 0.0f64);
    for arc in &config.arcs {
        for i in 1..=per_arc {
            let partial = Arc {
                length: arc.length * i as f64 / per_arc as f64,
                curvature: arc.curvature,
            };
            let (dx, dz) = partial.chord();
            let (s, c) = a.sin_cos();
            points.push(lift(r + dx * c + dz * s, z - dx * s + dz * c, config.bend_plane));
        }
        let (dx, dz) = arc.chord();
        let (s, c) = a.sin_cos();
        r += dx * c + dz * s;
        z += -dx * s + dz * c;
        a += arc.angle();
    }
    points
}

/// Everything needed to evaluate the forward model.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub geom: RobotGeometry,
    pub mat: MaterialParams,
    pub curve: StiffnessCurve,
    pub actuation: ActuationModel,
}

impl RobotModel {
    pub fn bend(&self, spine_length: f64, pressures: &GroupPressures) -> Result<BendConfig> {
        bend_config(
            &self.geom,
            &self.mat,
            &self.curve,
            &self.actuation,
            spine_length,
            pressures,
        )
    }

    pub fn tip(&self, spine_length: f64, pressures: &GroupPressures) -> Result<TipPose> {
        Ok(forward_kinematics(&self.bend(spine_length, pressures)?, &self.geom))
    }
}

/// Bend angle in degrees at every (spine length, group-1 pressure) pair.
/// Rows follow `lengths`, columns follow `pressures`.
pub fn bend_angle_table(
    model: &RobotModel,
    lengths: &[f64],
    pressures: &[f64],
) -> Result<Vec<Vec<f64>>> {
    bend_angle_table_with(Execution::default(), model, lengths, pressures)
}

pub fn bend_angle_table_with(
    exec: Execution,
    model: &RobotModel,
    lengths: &[f64],
    pressures: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let cols = pressures.len();
    let cells = exec::map_range(exec, lengths.len() * cols, |idx| {
        let (i, j) = (idx / cols.max(1), idx % cols.max(1));
        let p = GroupPressures::single(pressures[j])?;
        Ok(model.bend(lengths[i], &p)?.bend_angle.to_degrees())
    });
    let cells: Vec<f64> = cells.into_iter().collect::<Result<_>>()?;
    Ok(cells.chunks(cols.max(1)).map(<[f64]>::to_vec).take(lengths.len()).collect())
}
