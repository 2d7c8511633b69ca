//! Reduced-order modeling toolkit for a soft continuum robot whose bending
//! profile is reconfigured by a growing, granular-jammed inner spine.
//!
//! * [`beam`]: cantilever mechanics used to characterize the jammed spine.
//! * [`stiffness`]: spine modulus vs grown length and the body rigidity profile.
//! * [`kinematics`]: chamber pressures to piecewise-constant-curvature shape.
//! * [`pneumatic`]: idle / growing / jammed valve logic.
//! * [`length`]: stepper length control with a measured error model.
//! * [`calibration`]: CSV ingestion and parameter fits.
//! * [`planner`]: inverse configuration search and command sequencing.
//! * [`scenario`]: timed script replay with CSV and SVG output.
//!
//! All quantities are SI internally; [`units`] handles the cm / kPa / degree
//! boundary.

pub mod beam;
pub mod calibration;
pub mod config;
pub mod error;
pub mod exec;
pub mod kinematics;
pub mod length;
pub mod planner;
pub mod pneumatic;
pub mod scenario;
pub mod stiffness;
pub mod svg;
pub mod units;

pub use error::{Error, Result};
pub use exec::Execution;
