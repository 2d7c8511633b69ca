//! Ingestion of bench-test CSVs and fitting of model parameters.
//!
//! Two fits live here:
//! * spine moduli from cantilever push tests (tip force vs tip deflection),
//! * the actuation model (moment gain `c`, body rigidity scale `β`) from
//!   measured bend angles and, optionally, tip positions.
//!
//! The angle model is θ = c·P·Σ lᵢ / (β·EI_body + EI_spine,ᵢ). For a fixed β it
//! is linear in c, so c has a closed form and only β needs a 1-D search.
//! Tip positions are nonlinear in c; when records carry them, c is found by a
//! second 1-D search nested inside the β search.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use crate::beam::modulus_from_tip;
use crate::config::{MaterialParams, RobotGeometry};
use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, ActuationModel, GroupPressures, RobotModel};
use crate::stiffness::{rigidity_profile, default_curve, StiffnessCurve, StiffnessSample};

/// Bending angles measured at 250 kPa with no spine and with a 30 cm spine.
pub const ANCHOR_ANGLES_DEG: [(f64, f64); 2] = [(0.0, 65.64), (0.30, 41.50)];
/// In-plane tip reach at 250 kPa for the same two configurations, m.
pub const ANCHOR_REACH: [(f64, f64); 2] = [(0.0, 0.2087), (0.30, 0.1051)];
pub const ANCHOR_PRESSURE: f64 = 250_000.0;

const BETA_RANGE: (f64, f64) = (1e-3, 1e3);
const BETA_SCAN: usize = 241;
const GAIN_SPAN: f64 = 8.0;
const GAIN_SCAN: usize = 49;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Loading,
    Unloading,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceDeflectionRecord {
    pub spine_length: f64,
    pub force: f64,
    pub deflection: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BendingRecord {
    pub spine_length: f64,
    pub pressure: f64,
    pub bend_angle: f64,
    /// In-plane reach of the tip, m.
    pub tip_x: Option<f64>,
    /// Height of the tip along the undeformed axis, m.
    pub tip_y: Option<f64>,
}

impl BendingRecord {
    pub fn angle_only(spine_length: f64, pressure: f64, bend_angle: f64) -> Self {
        Self {
            spine_length,
            pressure,
            bend_angle,
            tip_x: None,
            tip_y: None,
        }
    }

    fn has_tip(&self) -> bool {
        self.tip_x.is_some() || self.tip_y.is_some()
    }
}

#[derive(Deserialize)]
struct RawForceRow {
    length_cm: f64,
    force_n: f64,
    deflection_cm: f64,
    phase: String,
}

#[derive(Deserialize)]
struct RawBendingRow {
    length_cm: f64,
    pressure_kpa: f64,
    angle_deg: f64,
    #[serde(default)]
    tip_x_cm: Option<f64>,
    #[serde(default)]
    tip_y_cm: Option<f64>,
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn row_error(row: usize, err: impl std::fmt::Display) -> Error {
    Error::Ingest {
        row,
        message: err.to_string(),
    }
}

fn invalid(field: &str, row: usize, message: String) -> Error {
    Error::validation(field, format!("row {row}: {message}"))
}

pub fn ingest_force_deflection(path: impl AsRef<Path>, geom: &RobotGeometry) -> Result<Vec<ForceDeflectionRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_force_deflection(file, geom)
}

/// Rows are numbered from 1 at the first data line.
pub fn parse_force_deflection<R: Read>(input: R, geom: &RobotGeometry) -> Result<Vec<ForceDeflectionRecord>> {
    let mut reader = csv_reader(input);
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<RawForceRow>().enumerate() {
        let row_no = i + 1;
        let raw = row.map_err(|e| row_error(row_no, e))?;
        let phase = match raw.phase.to_ascii_lowercase().as_str() {
            "loading" => Phase::Loading,
            "unloading" => Phase::Unloading,
            other => return Err(row_error(row_no, format!("unknown phase `{other}`"))),
        };
        let rec = ForceDeflectionRecord {
            spine_length: raw.length_cm / 100.0,
            force: raw.force_n,
            deflection: raw.deflection_cm / 100.0,
            phase,
        };
        if !(rec.spine_length > 0.0 && rec.spine_length <= geom.spine_max_length) {
            return Err(invalid(
                "length_cm",
                row_no,
                format!("{} cm outside (0, {}] cm", raw.length_cm, geom.spine_max_length * 100.0),
            ));
        }
        if !(rec.force.is_finite() && rec.force >= 0.0) {
            return Err(invalid("force_n", row_no, format!("negative force {}", raw.force_n)));
        }
        if !(rec.deflection.is_finite() && rec.deflection >= 0.0) {
            return Err(invalid(
                "deflection_cm",
                row_no,
                format!("negative deflection {}", raw.deflection_cm),
            ));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn ingest_bending(path: impl AsRef<Path>, geom: &RobotGeometry) -> Result<Vec<BendingRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_bending(file, geom)
}

/// Header `length_cm,pressure_kpa,angle_deg[,tip_x_cm,tip_y_cm]`; tip cells may be empty.
pub fn parse_bending<R: Read>(input: R, geom: &RobotGeometry) -> Result<Vec<BendingRecord>> {
    let mut reader = csv_reader(input);
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<RawBendingRow>().enumerate() {
        let row_no = i + 1;
        let raw = row.map_err(|e| row_error(row_no, e))?;
        let rec = BendingRecord {
            spine_length: raw.length_cm / 100.0,
            pressure: raw.pressure_kpa * 1000.0,
            bend_angle: raw.angle_deg.to_radians(),
            tip_x: raw.tip_x_cm.map(|v| v / 100.0),
            tip_y: raw.tip_y_cm.map(|v| v / 100.0),
        };
        if !(0.0..=geom.spine_max_length).contains(&rec.spine_length) {
            return Err(invalid("length_cm", row_no, format!("{} cm out of range", raw.length_cm)));
        }
        if !(rec.pressure.is_finite() && rec.pressure >= 0.0) {
            return Err(invalid("pressure_kpa", row_no, format!("negative pressure {}", raw.pressure_kpa)));
        }
        if !(0.0..=std::f64::consts::PI).contains(&rec.bend_angle) {
            return Err(invalid("angle_deg", row_no, format!("{} deg outside [0, 180]", raw.angle_deg)));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Group records by spine length, keeping the order of lengths ascending.
fn by_length<T>(items: &[T], length: impl Fn(&T) -> f64) -> BTreeMap<u64, Vec<&T>> {
    let mut groups: BTreeMap<u64, Vec<&T>> = BTreeMap::new();
    for it in items {
        groups.entry(length(it).to_bits()).or_default().push(it);
    }
    groups
}

/// Mean cantilever modulus per spine length from loading-phase records.
/// Zero-deflection records carry no modulus information and are skipped.
pub fn estimate_moduli(records: &[ForceDeflectionRecord], spine_radius: f64) -> Result<Vec<StiffnessSample>> {
    if records.is_empty() {
        return Err(Error::Fit("no force-deflection records".into()));
    }
    let mut samples = Vec::new();
    for (bits, group) in by_length(records, |r| r.spine_length) {
        let length = f64::from_bits(bits);
        let mut moduli = Vec::new();
        for r in group.iter().filter(|r| r.phase == Phase::Loading) {
            if r.deflection == 0.0 || r.force == 0.0 {
                log::warn!(
                    "skipping record at {length} m with force {} N and deflection {} m",
                    r.force,
                    r.deflection
                );
                continue;
            }
            moduli.push(modulus_from_tip(r.force, length, spine_radius, r.deflection)?);
        }
        if moduli.is_empty() {
            return Err(Error::Fit(format!(
                "no usable loading-phase records for spine length {} cm",
                length * 100.0
            )));
        }
        samples.push(StiffnessSample {
            length,
            modulus: moduli.iter().sum::<f64>() / moduli.len() as f64,
        });
    }
    Ok(samples)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HysteresisGap {
    pub spine_length: f64,
    pub loading_modulus: f64,
    pub unloading_modulus: f64,
    /// (unloading − loading) / loading.
    pub relative_gap: f64,
}

/// Loading vs unloading apparent modulus for every length that has both.
pub fn hysteresis_gaps(records: &[ForceDeflectionRecord], spine_radius: f64) -> Vec<HysteresisGap> {
    let mean_modulus = |group: &[&ForceDeflectionRecord], phase: Phase| {
        let ms: Vec<f64> = group
            .iter()
            .filter(|r| r.phase == phase)
            .filter_map(|r| modulus_from_tip(r.force, r.spine_length, spine_radius, r.deflection).ok())
            .collect();
        (!ms.is_empty()).then(|| ms.iter().sum::<f64>() / ms.len() as f64)
    };
    by_length(records, |r| r.spine_length)
        .into_iter()
        .filter_map(|(bits, group)| {
            let loading = mean_modulus(&group, Phase::Loading)?;
            let unloading = mean_modulus(&group, Phase::Unloading)?;
            Some(HysteresisGap {
                spine_length: f64::from_bits(bits),
                loading_modulus: loading,
                unloading_modulus: unloading,
                relative_gap: (unloading - loading) / loading,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitOptions {
    /// Hold β at 1 and fit only the moment gain.
    pub fix_rigidity_scale: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub record: BendingRecord,
    pub predicted_angle: f64,
    /// predicted − measured, rad.
    pub angle_error: f64,
    pub predicted_tip_x: Option<f64>,
    pub predicted_tip_y: Option<f64>,
}

impl Residual {
    pub fn relative_angle_error(&self) -> Option<f64> {
        (self.record.bend_angle > 0.0).then(|| self.angle_error / self.record.bend_angle)
    }

    pub fn tip_x_error(&self) -> Option<f64> {
        Some(self.predicted_tip_x? - self.record.tip_x?)
    }

    pub fn tip_y_error(&self) -> Option<f64> {
        Some(self.predicted_tip_y? - self.record.tip_y?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub moment_gain: f64,
    pub rigidity_scale: f64,
    /// True when β was held at 1 rather than fitted.
    pub rigidity_scale_fixed: bool,
    pub residuals: Vec<Residual>,
    /// Root-mean-square angle error, rad.
    pub rms_error: f64,
}

impl FitResult {
    pub fn actuation(&self) -> ActuationModel {
        ActuationModel {
            moment_gain: self.moment_gain,
            rigidity_scale: self.rigidity_scale,
        }
    }
}

/// Per-record (segment length, body EI, spine EI) plus the data.
struct Prepared {
    record: BendingRecord,
    segments: Vec<(f64, f64, f64)>,
}

impl Prepared {
    /// θ / c at the given β.
    fn angle_per_gain(&self, beta: f64) -> f64 {
        self.record.pressure
            * self
                .segments
                .iter()
                .map(|&(l, body, spine)| l / (beta * body + spine))
                .sum::<f64>()
    }
}

struct Problem<'a> {
    prepared: Vec<Prepared>,
    geom: &'a RobotGeometry,
    mat: &'a MaterialParams,
    curve: &'a StiffnessCurve,
    uses_tips: bool,
}

impl Problem<'_> {
    fn model(&self, gain: f64, beta: f64) -> RobotModel {
        RobotModel {
            geom: *self.geom,
            mat: *self.mat,
            curve: self.curve.clone(),
            actuation: ActuationModel {
                moment_gain: gain,
                rigidity_scale: beta,
            },
        }
    }

    /// Closed-form least-squares gain for the angle terms alone.
    fn angle_gain(&self, beta: f64) -> f64 {
        let (num, den) = self.prepared.iter().fold((0.0, 0.0), |(n, d), p| {
            let a = p.angle_per_gain(beta);
            (n + a * p.record.bend_angle, d + a * a)
        });
        num / den
    }

    fn residuals(&self, gain: f64, beta: f64) -> Result<Vec<Residual>> {
        let model = self.model(gain, beta);
        self.prepared
            .iter()
            .map(|p| {
                let r = &p.record;
                let predicted_angle = gain * p.angle_per_gain(beta);
                let (tip_x, tip_y) = if r.has_tip() {
                    let pressures = GroupPressures([r.pressure, 0.0, 0.0]);
                    let cfg = model.bend(r.spine_length, &pressures)?;
                    let tip = forward_kinematics(&cfg, &model.geom);
                    (r.tip_x.map(|_| tip.reach()), r.tip_y.map(|_| tip.position[2]))
                } else {
                    (None, None)
                };
                Ok(Residual {
                    record: *r,
                    predicted_angle,
                    angle_error: predicted_angle - r.bend_angle,
                    predicted_tip_x: tip_x,
                    predicted_tip_y: tip_y,
                })
            })
            .collect()
    }

    /// Angle errors in rad plus tip errors scaled by body length.
    fn cost(&self, gain: f64, beta: f64) -> f64 {
        let Ok(res) = self.residuals(gain, beta) else {
            return f64::INFINITY;
        };
        let scale = self.geom.body_length;
        res.iter()
            .map(|r| {
                r.angle_error.powi(2)
                    + r.tip_x_error().map_or(0.0, |e| (e / scale).powi(2))
                    + r.tip_y_error().map_or(0.0, |e| (e / scale).powi(2))
            })
            .sum()
    }

    fn best_gain(&self, beta: f64) -> (f64, f64) {
        let c0 = self.angle_gain(beta);
        if !self.uses_tips || c0.is_nan() || c0 <= 0.0 {
            return (c0, self.cost(c0, beta));
        }
        let (log_c, cost, _) = scan_then_refine(
            |lc| self.cost(lc.exp(), beta),
            (c0 / GAIN_SPAN).ln(),
            (c0 * GAIN_SPAN).ln(),
            GAIN_SCAN,
        );
        (log_c.exp(), cost)
    }
}

/// Least-squares fit of (c, β) to bending records.
pub fn fit_actuation(
    records: &[BendingRecord],
    geom: &RobotGeometry,
    mat: &MaterialParams,
    curve: &StiffnessCurve,
    options: FitOptions,
) -> Result<FitResult> {
    if records.is_empty() {
        return Err(Error::Fit("no bending records".into()));
    }
    if records.iter().all(|r| r.pressure == 0.0) {
        return Err(Error::Fit(
            "moment gain is unidentifiable: every record has zero pressure".into(),
        ));
    }
    let prepared = records
        .iter()
        .map(|r| {
            let profile = rigidity_profile(geom, mat, curve, r.spine_length)?;
            Ok(Prepared {
                record: *r,
                segments: profile
                    .segments
                    .iter()
                    .map(|s| (s.len(), s.body_ei, s.spine_ei))
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let problem = Problem {
        prepared,
        geom,
        mat,
        curve,
        uses_tips: records.iter().any(BendingRecord::has_tip),
    };

    let distinct_lengths = records
        .iter()
        .filter(|r| r.pressure > 0.0)
        .map(|r| r.spine_length.to_bits())
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    let fix_beta = options.fix_rigidity_scale || distinct_lengths < 2;

    let (gain, beta) = if fix_beta {
        (problem.best_gain(1.0).0, 1.0)
    } else {
        let (log_beta, _, at_edge) = scan_then_refine(
            |lb| problem.best_gain(lb.exp()).1,
            BETA_RANGE.0.ln(),
            BETA_RANGE.1.ln(),
            BETA_SCAN,
        );
        if at_edge {
            return Err(Error::Fit(format!(
                "rigidity scale is unidentifiable from these records (optimum at search bound {:.3e})",
                log_beta.exp()
            )));
        }
        let beta = log_beta.exp();
        (problem.best_gain(beta).0, beta)
    };
    if !(gain.is_finite() && gain > 0.0) {
        return Err(Error::Fit(format!(
            "moment gain is unidentifiable: best fit gives {gain:e} N·m/Pa"
        )));
    }

    let residuals = problem.residuals(gain, beta)?;
    let rms_error =
        (residuals.iter().map(|r| r.angle_error.powi(2)).sum::<f64>() / residuals.len() as f64).sqrt();
    Ok(FitResult {
        moment_gain: gain,
        rigidity_scale: beta,
        rigidity_scale_fixed: fix_beta,
        residuals,
        rms_error,
    })
}

/// Grid scan followed by golden-section refinement around the best cell.
/// Returns (argmin, min, argmin sits on an end of the interval).
fn scan_then_refine(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64, bool) {
    let h = (hi - lo) / (n - 1) as f64;
    let values: Vec<f64> = (0..n).map(|i| f(lo + i as f64 * h)).collect();
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if best == 0 || best == n - 1 {
        return (lo + best as f64 * h, values[best], true);
    }
    let a = lo + (best - 1) as f64 * h;
    let b = lo + (best + 1) as f64 * h;
    let (x, fx) = golden_section(&f, a, b, 1e-13);
    if fx <= values[best] {
        (x, fx, false)
    } else {
        (lo + best as f64 * h, values[best], false)
    }
}

fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Measured vs predicted table, one line per record.
pub fn residual_report(fit: &FitResult) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "moment gain c = {:.4e} N·m/Pa, rigidity scale β = {:.4}{}",
        fit.moment_gain,
        fit.rigidity_scale,
        if fit.rigidity_scale_fixed { " (fixed)" } else { "" }
    );
    let _ = writeln!(
        out,
        "{:>10} {:>10} {:>12} {:>12} {:>10} {:>12} {:>12}",
        "spine_cm", "p_kpa", "meas_deg", "pred_deg", "rel_err", "meas_x_cm", "pred_x_cm"
    );
    for r in &fit.residuals {
        let rel = r
            .relative_angle_error()
            .map_or_else(|| "-".to_string(), |e| format!("{:.3}%", e * 100.0));
        let cm = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{:.4}", x * 100.0));
        let _ = writeln!(
            out,
            "{:>10.4} {:>10.4} {:>12.4} {:>12.4} {:>10} {:>12} {:>12}",
            r.record.spine_length * 100.0,
            r.record.pressure / 1000.0,
            r.record.bend_angle.to_degrees(),
            r.predicted_angle.to_degrees(),
            rel,
            cm(r.record.tip_x),
            cm(r.predicted_tip_x),
        );
    }
    let _ = writeln!(out, "rms angle error = {:.4e} deg", fit.rms_error.to_degrees());
    out
}

pub fn anchor_records() -> Vec<BendingRecord> {
    ANCHOR_ANGLES_DEG
        .iter()
        .map(|&(l, deg)| BendingRecord::angle_only(l, ANCHOR_PRESSURE, deg.to_radians()))
        .collect()
}

/// Anchor angles together with the anchor tip reaches.
pub fn reach_anchor_records() -> Vec<BendingRecord> {
    anchor_records()
        .into_iter()
        .zip(ANCHOR_REACH)
        .map(|(r, (_, reach))| BendingRecord {
            tip_x: Some(reach),
            ..r
        })
        .collect()
}

/// Default geometry, material and spine curve with (c, β) fitted exactly to
/// the two anchor angles.
pub fn anchored_model() -> RobotModel {
    let (geom, mat, curve) = (RobotGeometry::default(), MaterialParams::default(), default_curve());
    let fit = fit_actuation(&anchor_records(), &geom, &mat, &curve, FitOptions::default())
        .expect("anchor records determine both parameters");
    RobotModel {
        geom,
        mat,
        curve,
        actuation: fit.actuation(),
    }
}

/// `parameter,value`.
pub fn write_fit_csv(path: impl AsRef<Path>, fit: &FitResult) -> Result<()> {
    let path = path.as_ref();
    let body = format!(
        "parameter,value\nmoment_gain_nm_per_pa,{}\nrigidity_scale,{}\nrigidity_scale_fixed,{}\nrms_error_rad,{}\n",
        fit.moment_gain,
        fit.rigidity_scale,
        u8::from(fit.rigidity_scale_fixed),
        fit.rms_error
    );
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn read_fit_csv(path: impl AsRef<Path>) -> Result<ActuationModel> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut gain = None;
    let mut beta = None;
    for (i, row) in csv_reader(file).records().enumerate() {
        let row = row.map_err(|e| row_error(i + 1, e))?;
        let value = || -> Result<f64> {
            row.get(1)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| row_error(i + 1, "expected a numeric value"))
        };
        match row.get(0) {
            Some("moment_gain_nm_per_pa") => gain = Some(value()?),
            Some("rigidity_scale") => beta = Some(value()?),
            _ => {}
        }
    }
    let gain = gain.ok_or_else(|| Error::validation("moment_gain_nm_per_pa", "missing"))?;
    ActuationModel::new(gain, beta.unwrap_or(1.0))
}

/// `length_cm,modulus_kpa`.
pub fn write_curve_csv(path: impl AsRef<Path>, curve: &StiffnessCurve) -> Result<()> {
    let path = path.as_ref();
    let mut body = String::from("length_cm,modulus_kpa\n");
    for s in curve.samples() {
        let _ = writeln!(body, "{},{}", s.length * 100.0, s.modulus / 1000.0);
    }
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn read_curve_csv(path: impl AsRef<Path>, max_length: f64) -> Result<StiffnessCurve> {
    #[derive(Deserialize)]
    struct Row {
        length_cm: f64,
        modulus_kpa: f64,
    }
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let samples = csv_reader(file)
        .deserialize::<Row>()
        .enumerate()
        .map(|(i, r)| {
            let r = r.map_err(|e| row_error(i + 1, e))?;
            Ok(StiffnessSample {
                length: r.length_cm / 100.0,
                modulus: r.modulus_kpa * 1000.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let last = samples.last().map_or(0.0, |s| s.length);
    StiffnessCurve::with_max_length(samples, max_length.max(last))
}
