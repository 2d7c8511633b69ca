//! Jammed-spine modulus as a function of grown length, and the resulting
//! flexural-rigidity profile of the body with the spine inside it.

use crate::beam::second_moment_circle;
use crate::config::{MaterialParams, RobotGeometry};
use crate::error::{Error, Result};

/// Averaged moduli of the jammed spine (−70 kPa) at 5…30 cm, in Pa.
pub const MEASURED_MODULI: [(f64, f64); 6] = [
    (0.05, 0.318e6),
    (0.10, 1.323e6),
    (0.15, 2.032e6),
    (0.20, 3.069e6),
    (0.25, 3.763e6),
    (0.30, 4.389e6),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StiffnessSample {
    pub length: f64,
    pub modulus: f64,
}

/// Monotone piecewise-linear modulus curve.
///
/// Below the first sample the curve runs linearly to the origin (a spine of
/// zero length adds no stiffness). Between the last sample and
/// `max_length` it is held flat.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessCurve {
    samples: Vec<StiffnessSample>,
    max_length: f64,
}

impl StiffnessCurve {
    pub fn new(samples: Vec<StiffnessSample>) -> Result<Self> {
        let max_length = samples.last().map_or(0.0, |s| s.length);
        Self::with_max_length(samples, max_length)
    }

    pub fn with_max_length(samples: Vec<StiffnessSample>, max_length: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::validation(
                "stiffness_curve",
                format!("needs at least 2 samples, got {}", samples.len()),
            ));
        }
        for s in &samples {
            if !(s.length.is_finite() && s.length > 0.0) {
                return Err(Error::validation("length", format!("must be positive, got {}", s.length)));
            }
            if !(s.modulus.is_finite() && s.modulus > 0.0) {
                return Err(Error::validation("modulus", format!("must be positive, got {}", s.modulus)));
            }
        }
        for w in samples.windows(2) {
            if w[1].length <= w[0].length {
                return Err(Error::validation(
                    "length",
                    "sample lengths must be strictly increasing",
                ));
            }
            if w[1].modulus < w[0].modulus {
                return Err(Error::validation(
                    "modulus",
                    format!(
                        "modulus drops from {} Pa to {} Pa between {} m and {} m",
                        w[0].modulus, w[1].modulus, w[0].length, w[1].length
                    ),
                ));
            }
        }
        let last = samples[samples.len() - 1].length;
        if !(max_length.is_finite() && max_length >= last) {
            return Err(Error::validation(
                "max_length",
                format!("{max_length} m is shorter than the last sample at {last} m"),
            ));
        }
        Ok(Self {
            samples,
            max_length,
        })
    }

    pub fn samples(&self) -> &[StiffnessSample] {
        &self.samples
    }

    pub fn max_length(&self) -> f64 {
        self.max_length
    }

    pub fn modulus_at(&self, length: f64) -> Result<f64> {
        if !(length > 0.0 && length <= self.max_length) {
            return Err(Error::domain(format!(
                "spine length {length} m outside (0, {}] m",
                self.max_length
            )));
        }
        let first = self.samples[0];
        let last = self.samples[self.samples.len() - 1];
        if length <= first.length {
            return Ok(first.modulus * length / first.length);
        }
        if length >= last.length {
            return Ok(last.modulus);
        }
        let hi = self.samples.partition_point(|s| s.length < length);
        let (a, b) = (self.samples[hi - 1], self.samples[hi]);
        let t = (length - a.length) / (b.length - a.length);
        Ok(a.modulus + t * (b.modulus - a.modulus))
    }
}

impl Default for StiffnessCurve {
    fn default() -> Self {
        default_curve()
    }
}

pub fn default_curve() -> StiffnessCurve {
    let samples = MEASURED_MODULI
        .iter()
        .map(|&(length, modulus)| StiffnessSample { length, modulus })
        .collect();
    StiffnessCurve::new(samples).expect("measured moduli form a valid curve")
}

/// One constant-rigidity stretch of the robot, measured from the base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigiditySegment {
    pub start: f64,
    pub end: f64,
    /// Silicone body contribution, N·m².
    pub body_ei: f64,
    /// Jammed spine contribution, N·m² (zero outside the spine).
    pub spine_ei: f64,
}

impl RigiditySegment {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= 0.0
    }

    pub fn ei(&self) -> f64 {
        self.body_ei + self.spine_ei
    }

    /// Rigidity with the body term rescaled by `body_scale`.
    pub fn scaled_ei(&self, body_scale: f64) -> f64 {
        body_scale * self.body_ei + self.spine_ei
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigidityProfile {
    pub segments: Vec<RigiditySegment>,
}

impl RigidityProfile {
    pub fn total_length(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }
}

/// Base-anchored spine of length `spine_length` working in parallel with the
/// body: EI adds over the spine-covered stretch.
pub fn rigidity_profile(
    geom: &RobotGeometry,
    mat: &MaterialParams,
    curve: &StiffnessCurve,
    spine_length: f64,
) -> Result<RigidityProfile> {
    if !(0.0..=geom.spine_max_length).contains(&spine_length) {
        return Err(Error::domain(format!(
            "spine length {spine_length} m outside [0, {}] m",
            geom.spine_max_length
        )));
    }
    let body_ei = mat.body_modulus * geom.body_second_moment();
    if spine_length == 0.0 {
        return Ok(RigidityProfile {
            segments: vec![RigiditySegment {
                start: 0.0,
                end: geom.body_length,
                body_ei,
                spine_ei: 0.0,
            }],
        });
    }
    let spine_ei = curve.modulus_at(spine_length)? * second_moment_circle(geom.spine_radius)?;
    let mut segments = vec![RigiditySegment {
        start: 0.0,
        end: spine_length,
        body_ei,
        spine_ei,
    }];
    if spine_length < geom.body_length {
        segments.push(RigiditySegment {
            start: spine_length,
            end: geom.body_length,
            body_ei,
            spine_ei: 0.0,
        });
    }
    Ok(RigidityProfile { segments })
}
