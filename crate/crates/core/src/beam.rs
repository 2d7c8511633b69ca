//! Euler–Bernoulli cantilever under a point load at the free end.
//!
//! Deflections are magnitudes, positive in the direction of the applied
//! load. Shear, self-weight and large-rotation effects are not modeled.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default step count for [`deflection_oracle`].
pub const ORACLE_STEPS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSpec {
    /// Cantilever length, m.
    pub length: f64,
    /// Young's modulus, Pa.
    pub modulus: f64,
    /// Second moment of area, m⁴.
    pub second_moment: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeflectionSample {
    pub position: f64,
    pub deflection: f64,
    pub load: f64,
}

impl BeamSpec {
    pub fn new(length: f64, modulus: f64, second_moment: f64) -> Result<Self> {
        let spec = Self {
            length,
            modulus,
            second_moment,
        };
        for (name, v) in [
            ("length", length),
            ("modulus", modulus),
            ("second moment", second_moment),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("beam {name} must be positive, got {v}")));
            }
        }
        Ok(spec)
    }

    /// Solid circular section of radius `radius`.
    pub fn circular(length: f64, modulus: f64, radius: f64) -> Result<Self> {
        Self::new(length, modulus, second_moment_circle(radius)?)
    }

    pub fn rigidity(&self) -> f64 {
        self.modulus * self.second_moment
    }

    fn check_position(&self, x: f64) -> Result<()> {
        if !(0.0..=self.length).contains(&x) {
            return Err(Error::domain(format!(
                "position {x} m outside beam [0, {}] m",
                self.length
            )));
        }
        Ok(())
    }

    pub fn sample(&self, load: f64, x: f64) -> Result<DeflectionSample> {
        Ok(DeflectionSample {
            position: x,
            deflection: deflection_at(self, load, x)?,
            load,
        })
    }
}

/// I = πr⁴/4.
pub fn second_moment_circle(radius: f64) -> Result<f64> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {radius}")));
    }
    Ok(PI * radius.powi(4) / 4.0)
}

/// y(x) = F(3L − x)x² / 6EI.
pub fn deflection_at(spec: &BeamSpec, load: f64, x: f64) -> Result<f64> {
    spec.check_position(x)?;
    Ok(load * (3.0 * spec.length - x) * x * x / (6.0 * spec.rigidity()))
}

/// y(L) = FL³ / 3EI.
pub fn tip_deflection(spec: &BeamSpec, load: f64) -> Result<f64> {
    deflection_at(spec, load, spec.length)
}

/// Invert the tip deflection of a solid circular cantilever for its modulus:
/// E = 4FL³ / (3πr⁴y).
pub fn modulus_from_tip(load: f64, length: f64, radius: f64, tip: f64) -> Result<f64> {
    if !(load.is_finite() && load > 0.0) {
        return Err(Error::domain(format!("load must be positive, got {load}")));
    }
    if !(tip.is_finite() && tip > 0.0) {
        return Err(Error::domain(format!(
            "tip deflection must be positive, got {tip}"
        )));
    }
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::domain(format!("length must be positive, got {length}")));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {radius}")));
    }
    Ok(4.0 * load * length.powi(3) / (3.0 * PI * radius.powi(4) * tip))
}

/// Deflection from integrating y'' = F(L − x)/EI twice from the clamped end
/// (y(0) = 0, y'(0) = 0) with the trapezoidal rule on `ORACLE_STEPS` steps.
pub fn deflection_oracle(spec: &BeamSpec, load: f64, x: f64) -> Result<f64> {
    deflection_oracle_with_steps(spec, load, x, ORACLE_STEPS)
}

pub fn deflection_oracle_with_steps(
    spec: &BeamSpec,
    load: f64,
    x: f64,
    steps: usize,
) -> Result<f64> {
    spec.check_position(x)?;
    if steps == 0 {
        return Err(Error::domain("oracle needs at least one step"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let ei = spec.rigidity();
    let curvature = |s: f64| load * (spec.length - s) / ei;
    let h = x / steps as f64;

    let mut slope = 0.0;
    let mut y = 0.0;
    let mut prev_curv = curvature(0.0);
    for i in 1..=steps {
        let s = i as f64 * h;
        let curv = curvature(s);
        let next_slope = slope + 0.5 * h * (prev_curv + curv);
        y += 0.5 * h * (slope + next_slope);
        slope = next_slope;
        prev_curv = curv;
    }
    Ok(y)
}
