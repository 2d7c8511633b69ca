//! Unit conversion at I/O boundaries.
//!
//! Everything inside the crate is SI (meters, pascals, newtons, radians).
//! Files and the command line speak centimeters, kilopascals and degrees;
//! the conversions live here and nowhere else.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    M,
    Cm,
    Pa,
    KPa,
    Rad,
    Deg,
    N,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Length,
    Pressure,
    Angle,
    Force,
}

impl Unit {
    pub const ALL: [Unit; 7] = [
        Unit::M,
        Unit::Cm,
        Unit::Pa,
        Unit::KPa,
        Unit::Rad,
        Unit::Deg,
        Unit::N,
    ];

    fn dimension(self) -> Dimension {
        match self {
            Unit::M | Unit::Cm => Dimension::Length,
            Unit::Pa | Unit::KPa => Dimension::Pressure,
            Unit::Rad | Unit::Deg => Dimension::Angle,
            Unit::N => Dimension::Force,
        }
    }

    /// Multiply a value in this unit by the factor to obtain SI.
    fn to_si(self) -> f64 {
        match self {
            Unit::M | Unit::Pa | Unit::Rad | Unit::N => 1.0,
            Unit::Cm => 0.01,
            Unit::KPa => 1000.0,
            Unit::Deg => std::f64::consts::PI / 180.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Unit::M => "m",
            Unit::Cm => "cm",
            Unit::Pa => "Pa",
            Unit::KPa => "kPa",
            Unit::Rad => "rad",
            Unit::Deg => "deg",
            Unit::N => "N",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Unit::ALL
            .into_iter()
            .find(|u| u.symbol().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Unit {
                from: s.to_string(),
                to: "?".to_string(),
            })
    }
}

/// Linear conversion between two dimensionally compatible units.
pub fn convert(value: f64, from: Unit, to: Unit) -> Result<f64> {
    if from.dimension() != to.dimension() {
        return Err(Error::Unit {
            from: from.to_string(),
            to: to.to_string(),
        });
    }
    if from == to {
        return Ok(value);
    }
    // Route degrees through an exact ratio so that 180 deg maps to PI bit-for-bit.
    Ok(match (from, to) {
        (Unit::Deg, Unit::Rad) => value.to_radians(),
        (Unit::Rad, Unit::Deg) => value.to_degrees(),
        _ => value * from.to_si() / to.to_si(),
    })
}

pub fn cm(value: f64) -> f64 {
    value * 0.01
}

pub fn to_cm(meters: f64) -> f64 {
    meters * 100.0
}

pub fn kpa(value: f64) -> f64 {
    value * 1000.0
}

pub fn to_kpa(pascals: f64) -> f64 {
    pascals / 1000.0
}
