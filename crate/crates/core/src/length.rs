//! Stepper-driven spine length: ideal step conversion plus a stochastic
//! realization model fitted to repeated growth measurements.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};

/// Commanded lengths of the growth trials, cm.
pub const TRIAL_REFERENCE_CM: [f64; 6] = [5.0, 10.0, 15.0, 20.0, 25.0, 30.0];
/// Mean measured length per trial, cm.
pub const TRIAL_MEAN_CM: [f64; 6] = [5.25, 10.53, 15.77, 21.06, 26.42, 31.43];
/// Sample standard deviation per trial, cm.
pub const TRIAL_STD_CM: [f64; 6] = [0.30, 0.32, 0.31, 0.34, 0.39, 0.36];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperParams {
    pub steps_per_rev: u32,
    pub gearbox_ratio: f64,
    /// Radius of the spool that pays out the spine, m.
    pub shaft_radius: f64,
}

impl Default for StepperParams {
    fn default() -> Self {
        Self {
            steps_per_rev: 200,
            gearbox_ratio: 15.0,
            shaft_radius: 0.01,
        }
    }
}

impl StepperParams {
    pub fn validate(&self) -> Result<()> {
        if self.steps_per_rev == 0 {
            return Err(Error::validation("steps_per_rev", "must be positive"));
        }
        if !(self.gearbox_ratio.is_finite() && self.gearbox_ratio > 0.0) {
            return Err(Error::validation("gearbox_ratio", "must be positive"));
        }
        if !(self.shaft_radius.is_finite() && self.shaft_radius > 0.0) {
            return Err(Error::validation("shaft_radius", "must be positive"));
        }
        Ok(())
    }

    /// Spine travel per motor step, m.
    pub fn step_length(&self) -> f64 {
        2.0 * PI * self.shaft_radius / (self.gearbox_ratio * self.steps_per_rev as f64)
    }
}

pub fn steps_for_length(delta: f64, p: &StepperParams) -> Result<u64> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::domain(format!(
            "length increment must be non-negative, got {delta} m"
        )));
    }
    Ok(signed_steps_for_length(delta, p)? as u64)
}

/// Negative increments retract.
pub fn signed_steps_for_length(delta: f64, p: &StepperParams) -> Result<i64> {
    p.validate()?;
    if !delta.is_finite() {
        return Err(Error::domain("length increment must be finite"));
    }
    Ok((delta / p.step_length()).round() as i64)
}

pub fn length_from_steps(steps: u64, p: &StepperParams) -> f64 {
    steps as f64 * p.step_length()
}

/// Realized length = commanded · bias + N(0, σ(commanded)).
#[derive(Debug, Clone, PartialEq)]
pub struct LengthErrorModel {
    pub bias_factor: f64,
    /// (commanded length m, σ m), increasing in length.
    pub sigma_by_length: Vec<(f64, f64)>,
    /// Longest length the drive will accept, m.
    pub max_length: f64,
}

impl Default for LengthErrorModel {
    fn default() -> Self {
        Self {
            bias_factor: 1.0518,
            sigma_by_length: TRIAL_REFERENCE_CM
                .iter()
                .zip(TRIAL_STD_CM)
                .map(|(&l, s)| (l / 100.0, s / 100.0))
                .collect(),
            max_length: 0.30,
        }
    }
}

impl LengthErrorModel {
    /// A drive with no bias and no scatter.
    pub fn ideal(max_length: f64) -> Self {
        Self {
            bias_factor: 1.0,
            sigma_by_length: vec![(max_length, 0.0)],
            max_length,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bias_factor.is_finite() && self.bias_factor > 0.0) {
            return Err(Error::validation("bias_factor", "must be positive"));
        }
        if self.sigma_by_length.is_empty() {
            return Err(Error::validation("sigma_by_length", "needs at least one entry"));
        }
        if self.sigma_by_length.iter().any(|&(_, s)| !(s.is_finite() && s >= 0.0)) {
            return Err(Error::validation("sigma_by_length", "sigmas must be non-negative"));
        }
        if self.sigma_by_length.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::validation("sigma_by_length", "lengths must increase"));
        }
        Ok(())
    }

    /// Piecewise-linear in length, held flat outside the table.
    pub fn sigma(&self, length: f64) -> f64 {
        let table = &self.sigma_by_length;
        let (first, last) = (table[0], table[table.len() - 1]);
        if length <= first.0 {
            return first.1;
        }
        if length >= last.0 {
            return last.1;
        }
        let hi = table.partition_point(|&(l, _)| l < length);
        let ((l0, s0), (l1, s1)) = (table[hi - 1], table[hi]);
        s0 + (length - l0) / (l1 - l0) * (s1 - s0)
    }

    /// Length to command so that the expected realized length is `desired`.
    pub fn compensated_command(&self, desired: f64) -> f64 {
        desired / self.bias_factor
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRealization {
    pub commanded: f64,
    pub realized: f64,
    pub seed: u64,
}

/// Deterministic in (target, seed). Negative draws are clamped to zero.
pub fn simulate_growth(target: f64, model: &LengthErrorModel, seed: u64) -> Result<GrowthRealization> {
    if !(target > 0.0 && target <= model.max_length) {
        return Err(Error::domain(format!(
            "growth target {target} m outside (0, {}] m",
            model.max_length
        )));
    }
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(target.to_bits());
    let z: f64 = rng.sample(StandardNormal);
    let realized = (target * model.bias_factor + model.sigma(target) * z).max(0.0);
    Ok(GrowthRealization {
        commanded: target,
        realized,
        seed,
    })
}

/// One realization per (target, seed) pair, targets outermost.
pub fn monte_carlo(
    targets: &[f64],
    model: &LengthErrorModel,
    seeds: std::ops::Range<u64>,
) -> Result<Vec<GrowthRealization>> {
    monte_carlo_with(Execution::default(), targets, model, seeds)
}

pub fn monte_carlo_with(
    exec: Execution,
    targets: &[f64],
    model: &LengthErrorModel,
    seeds: std::ops::Range<u64>,
) -> Result<Vec<GrowthRealization>> {
    let per_target = (seeds.end.saturating_sub(seeds.start)) as usize;
    exec::map_range(exec, targets.len() * per_target, |i| {
        let target = targets[i / per_target];
        simulate_growth(target, model, seeds.start + (i % per_target) as u64)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    /// Mean of |realized − commanded| / commanded.
    pub mean_rel_error: f64,
    /// Largest per-target sample standard deviation, m.
    pub max_std: f64,
}

pub fn error_stats(realizations: &[GrowthRealization]) -> Result<ErrorStats> {
    if realizations.is_empty() {
        return Err(Error::domain("error statistics need at least one realization"));
    }
    let mean_rel_error = realizations
        .iter()
        .map(|r| (r.realized - r.commanded).abs() / r.commanded)
        .sum::<f64>()
        / realizations.len() as f64;

    let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for r in realizations {
        groups.entry(r.commanded.to_bits()).or_default().push(r.realized);
    }
    let max_std = groups
        .values()
        .map(|xs| sample_std(xs))
        .fold(0.0, f64::max);
    Ok(ErrorStats {
        mean_rel_error,
        max_std,
    })
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// `seed,commanded_cm,realized_cm`, full precision.
pub fn write_realizations_csv<W: Write>(mut out: W, realizations: &[GrowthRealization]) -> std::io::Result<()> {
    writeln!(out, "seed,commanded_cm,realized_cm")?;
    for r in realizations {
        writeln!(out, "{},{},{}", r.seed, r.commanded * 100.0, r.realized * 100.0)?;
    }
    Ok(())
}
