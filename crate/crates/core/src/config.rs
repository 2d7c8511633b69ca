//! Robot geometry, material parameters and the `key = value` config format.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::units::{convert, Unit};

/// Dimensions of the silicone body, its inner channel and the growing spine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotGeometry {
    pub body_length: f64,
    pub outer_radius: f64,
    pub channel_radius: f64,
    pub chamber_count: u32,
    pub group_count: u32,
    /// The spine diameter is not published; it defaults to the channel bore.
    pub spine_radius: f64,
    pub spine_max_length: f64,
}

impl Default for RobotGeometry {
    fn default() -> Self {
        Self {
            body_length: 0.40,
            outer_radius: 0.05,
            channel_radius: 0.029,
            chamber_count: 9,
            group_count: 3,
            spine_radius: 0.029,
            spine_max_length: 0.30,
        }
    }
}

impl RobotGeometry {
    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("body_length", self.body_length),
            ("outer_radius", self.outer_radius),
            ("channel_radius", self.channel_radius),
            ("spine_radius", self.spine_radius),
            ("spine_max_length", self.spine_max_length),
        ];
        for (field, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(field, format!("must be positive, got {v}")));
            }
        }
        if self.channel_radius >= self.outer_radius {
            return Err(Error::validation(
                "channel_radius",
                format!(
                    "{} m must be smaller than outer_radius {} m",
                    self.channel_radius, self.outer_radius
                ),
            ));
        }
        if self.spine_radius > self.channel_radius {
            return Err(Error::validation(
                "spine_radius",
                format!(
                    "{} m does not fit the channel of radius {} m",
                    self.spine_radius, self.channel_radius
                ),
            ));
        }
        if self.spine_max_length > self.body_length {
            return Err(Error::validation(
                "spine_max_length",
                format!(
                    "{} m exceeds body_length {} m",
                    self.spine_max_length, self.body_length
                ),
            ));
        }
        if self.chamber_count == 0 {
            return Err(Error::validation("chamber_count", "must be positive"));
        }
        if self.group_count == 0 || !self.chamber_count.is_multiple_of(self.group_count) {
            return Err(Error::validation(
                "group_count",
                format!(
                    "{} chambers cannot be split into {} equal groups",
                    self.chamber_count, self.group_count
                ),
            ));
        }
        Ok(())
    }

    /// Second moment of area of the hollow silicone cross-section.
    pub fn body_second_moment(&self) -> f64 {
        PI * (self.outer_radius.powi(4) - self.channel_radius.powi(4)) / 4.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    /// Neo-Hookean C1 of the silicone body, Pa.
    pub neo_hookean_c1: f64,
    /// Small-strain Young's modulus of the body, Pa.
    pub body_modulus: f64,
    /// Bulk density of the jamming medium, kg/m³. Informational only.
    pub glass_bubble_density: f64,
}

impl MaterialParams {
    /// Incompressible small-strain limit: E = 6·C1.
    pub fn from_c1(c1: f64) -> Self {
        Self {
            neo_hookean_c1: c1,
            body_modulus: 6.0 * c1,
            glass_bubble_density: 200.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.neo_hookean_c1.is_finite() && self.neo_hookean_c1 > 0.0) {
            return Err(Error::validation("neo_hookean_c1", "must be positive"));
        }
        if !(self.body_modulus.is_finite() && self.body_modulus > 0.0) {
            return Err(Error::validation("body_modulus", "must be positive"));
        }
        Ok(())
    }
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self::from_c1(42_500.0)
    }
}

/// Read a config file. Missing keys keep their defaults.
pub fn load_config(path: impl AsRef<Path>) -> Result<(RobotGeometry, MaterialParams)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<(RobotGeometry, MaterialParams)> {
    let mut geom = RobotGeometry::default();
    let mut c1 = None;
    let mut body_modulus = None;
    let mut density = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let number: f64 = value.parse().map_err(|_| Error::Config {
            line: line_no,
            message: format!("`{value}` is not a number"),
        })?;
        let bad_key = || Error::Config {
            line: line_no,
            message: format!("unknown key `{key}`"),
        };

        match key {
            "chamber_count" | "group_count" => {
                if number.fract() != 0.0 || number < 0.0 || number > u32::MAX as f64 {
                    return Err(Error::Config {
                        line: line_no,
                        message: format!("`{key}` must be a non-negative integer"),
                    });
                }
                if key == "chamber_count" {
                    geom.chamber_count = number as u32;
                } else {
                    geom.group_count = number as u32;
                }
            }
            "glass_bubble_density" | "glass_bubble_density_kg_m3" => density = Some(number),
            _ => {
                let (stem, unit) = split_unit_suffix(key).ok_or_else(bad_key)?;
                let si = |target: Unit| {
                    convert(number, unit, target).map_err(|_| Error::Config {
                        line: line_no,
                        message: format!("`{key}` has the wrong unit for this field"),
                    })
                };
                match stem {
                    "body_length" => geom.body_length = si(Unit::M)?,
                    "outer_radius" => geom.outer_radius = si(Unit::M)?,
                    "channel_radius" => geom.channel_radius = si(Unit::M)?,
                    "spine_radius" => geom.spine_radius = si(Unit::M)?,
                    "spine_max_length" => geom.spine_max_length = si(Unit::M)?,
                    "neo_hookean_c1" => c1 = Some(si(Unit::Pa)?),
                    "body_modulus" => body_modulus = Some(si(Unit::Pa)?),
                    _ => return Err(bad_key()),
                }
            }
        }
    }

    let mut mat = MaterialParams::from_c1(c1.unwrap_or(42_500.0));
    if let Some(e) = body_modulus {
        mat.body_modulus = e;
    }
    if let Some(d) = density {
        mat.glass_bubble_density = d;
    }
    geom.validate()?;
    mat.validate()?;
    Ok((geom, mat))
}

fn split_unit_suffix(key: &str) -> Option<(&str, Unit)> {
    const SUFFIXES: [(&str, Unit); 4] = [
        ("_cm", Unit::Cm),
        ("_m", Unit::M),
        ("_kpa", Unit::KPa),
        ("_pa", Unit::Pa),
    ];
    SUFFIXES
        .iter()
        .find_map(|&(suffix, unit)| key.strip_suffix(suffix).map(|stem| (stem, unit)))
}
