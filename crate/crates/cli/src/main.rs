//! `spinebend`: calibrate, simulate, plan and replay scenarios from the shell.
//!
//! Exit codes: 0 ok, 2 input error, 3 unreachable target, 4 replay violation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use spinebend_core::calibration::{
    anchor_records, estimate_moduli, fit_actuation, hysteresis_gaps, ingest_bending, ingest_force_deflection,
    read_curve_csv, read_fit_csv, residual_report, write_curve_csv, write_fit_csv, FitOptions,
};
use spinebend_core::config::{load_config, MaterialParams, RobotGeometry};
use spinebend_core::kinematics::{backbone, bend_angle_table, forward_kinematics, GroupPressures, RobotModel};
use spinebend_core::length::LengthErrorModel;
use spinebend_core::planner::{compensate_growth, plan, plan_csv, scenario_script, AngleConstraint, PlanRequest};
use spinebend_core::scenario::{run_scenario, tip_path_svg, trajectory_csv, RunOptions, Scenario};
use spinebend_core::stiffness::{default_curve, StiffnessCurve};
use spinebend_core::svg::SvgPlot;
use spinebend_core::Error;

const CURVE_FILE: &str = "stiffness_curve.csv";
const FIT_FILE: &str = "actuation_fit.csv";

#[derive(Parser)]
#[command(name = "spinebend", version, about = "Soft continuum robot with a jammed growing spine")]
struct Cli {
    /// Robot configuration file (`key = value`, unit-suffixed keys).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate the spine stiffness curve and fit the actuation model.
    Calibrate(CalibrateArgs),
    /// Forward model: bend angle and tip position.
    Simulate(SimulateArgs),
    /// Find a spine length and pressures that reach a tip target.
    Plan(PlanArgs),
    /// Replay a timed command script and log the trajectory.
    RunScenario(ScenarioArgs),
}

#[derive(Args)]
struct CalibrateArgs {
    /// Force–deflection CSV: length_cm,force_n,deflection_cm,phase
    #[arg(long)]
    spine_csv: Option<PathBuf>,
    /// Bending CSV: length_cm,pressure_kpa,angle_deg[,tip_x_cm,tip_y_cm]
    #[arg(long)]
    bending_csv: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Hold the rigidity scale at 1 and fit only the moment gain.
    #[arg(long)]
    fix_rigidity_scale: bool,
}

#[derive(Args)]
struct ModelArgs {
    /// Directory written by `calibrate`.
    #[arg(long)]
    calibration: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 0.0)]
    spine_cm: f64,
    #[arg(long, default_value_t = 0.0)]
    pressure_kpa: f64,
    /// Bend-plane azimuth; pressure is split over the adjacent chamber groups.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    phi_deg: f64,
    /// Print the bend-angle grid (0–30 cm × 50–250 kPa) as CSV instead.
    #[arg(long)]
    table: bool,
    /// Write the bend profile as SVG.
    #[arg(long)]
    svg: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], allow_negative_numbers = true, required = true)]
    target_cm: Vec<f64>,
    /// Required bend angle.
    #[arg(long, requires = "angle_tol_deg")]
    angle_deg: Option<f64>,
    #[arg(long, requires = "angle_deg")]
    angle_tol_deg: Option<f64>,
    #[arg(long, default_value_t = 5.0)]
    tol_mm: f64,
    #[arg(long, default_value_t = 250.0)]
    pressure_max_kpa: f64,
    /// Write the command sequence as a scenario script.
    #[arg(long)]
    emit_scenario: Option<PathBuf>,
    /// Write the plan as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Shorten grow commands to cancel the drive's mean overshoot.
    #[arg(long)]
    compensate_bias: bool,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Bundled name (fig9a–fig9d) or script path.
    #[arg(long)]
    scenario: String,
    /// Trajectory log (CSV).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grow to exactly the commanded length.
    #[arg(long)]
    ideal: bool,
    /// Write the tip path as SVG.
    #[arg(long)]
    svg: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Unreachable { .. } => 3,
        Error::Replay { .. } => 4,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let (geom, mat) = match &cli.config {
        Some(path) => load_config(path)?,
        None => (RobotGeometry::default(), MaterialParams::default()),
    };
    match cli.command {
        Cmd::Calibrate(args) => calibrate(args, geom, mat),
        Cmd::Simulate(args) => simulate(args, geom, mat),
        Cmd::Plan(args) => plan_cmd(args, geom, mat),
        Cmd::RunScenario(args) => run_scenario_cmd(args, geom, mat),
    }
}

fn write(path: &Path, contents: &str) -> Result<(), Error> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn default_spine_curve(geom: &RobotGeometry) -> Result<StiffnessCurve, Error> {
    StiffnessCurve::with_max_length(default_curve().samples().to_vec(), geom.spine_max_length)
}

/// The calibrated model from `dir`, or the default curve fitted to the
/// built-in anchor angles.
fn load_model(args: &ModelArgs, geom: RobotGeometry, mat: MaterialParams) -> Result<RobotModel, Error> {
    match &args.calibration {
        Some(dir) => {
            let curve_path = dir.join(CURVE_FILE);
            let curve = if curve_path.exists() {
                read_curve_csv(&curve_path, geom.spine_max_length)?
            } else {
                default_spine_curve(&geom)?
            };
            let actuation = read_fit_csv(dir.join(FIT_FILE))?;
            Ok(RobotModel {
                geom,
                mat,
                curve,
                actuation,
            })
        }
        None => {
            let curve = default_spine_curve(&geom)?;
            let fit = fit_actuation(&anchor_records(), &geom, &mat, &curve, FitOptions::default())?;
            Ok(RobotModel {
                geom,
                mat,
                curve,
                actuation: fit.actuation(),
            })
        }
    }
}

/// Four significant figures.
fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = (3 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.digits$}")
}

fn calibrate(args: CalibrateArgs, geom: RobotGeometry, mat: MaterialParams) -> Result<(), Error> {
    if args.spine_csv.is_none() && args.bending_csv.is_none() {
        return Err(Error::Validation {
            field: "calibrate".into(),
            message: "give --spine-csv and/or --bending-csv".into(),
        });
    }
    fs::create_dir_all(&args.out).map_err(|source| Error::Io {
        path: args.out.clone(),
        source,
    })?;

    let curve = match &args.spine_csv {
        Some(path) => {
            let records = ingest_force_deflection(path, &geom)?;
            let samples = estimate_moduli(&records, geom.spine_radius)?;
            println!("spine modulus estimates (loading phase):");
            println!("{:>10} {:>14}", "length_cm", "modulus_kpa");
            for s in &samples {
                println!("{:>10} {:>14}", sig4(s.length * 100.0), sig4(s.modulus / 1000.0));
            }
            for g in hysteresis_gaps(&records, geom.spine_radius) {
                info!("hysteresis at {} cm: {:?}", g.spine_length * 100.0, g);
            }
            let curve = StiffnessCurve::with_max_length(samples, geom.spine_max_length)?;
            let out = args.out.join(CURVE_FILE);
            write_curve_csv(&out, &curve)?;
            println!("wrote {}", out.display());
            curve
        }
        None => default_spine_curve(&geom)?,
    };

    if let Some(path) = &args.bending_csv {
        let records = ingest_bending(path, &geom)?;
        let options = FitOptions {
            fix_rigidity_scale: args.fix_rigidity_scale,
        };
        let fit = fit_actuation(&records, &geom, &mat, &curve, options)?;
        print!("{}", residual_report(&fit));
        let out = args.out.join(FIT_FILE);
        write_fit_csv(&out, &fit)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn simulate(args: SimulateArgs, geom: RobotGeometry, mat: MaterialParams) -> Result<(), Error> {
    let model = load_model(&args.model, geom, mat)?;
    if args.table {
        let lengths: Vec<f64> = (0..=6).map(|i| (i * 5) as f64 / 100.0).collect();
        let pressures: Vec<f64> = (1..=5).map(|i| (i * 50) as f64 * 1000.0).collect();
        let table = bend_angle_table(&model, &lengths, &pressures)?;
        let header: Vec<String> = pressures.iter().map(|p| format!("theta_deg_{}kpa", p / 1000.0)).collect();
        println!("spine_length_cm,{}", header.join(","));
        for (l, row) in lengths.iter().zip(&table) {
            let cells: Vec<String> = row.iter().map(|v| sig4(*v)).collect();
            println!("{},{}", l * 100.0, cells.join(","));
        }
        return Ok(());
    }

    let pressure = args.pressure_kpa * 1000.0;
    if !(0.0..=spinebend_core::kinematics::PRESSURE_LIMIT).contains(&pressure) {
        return Err(Error::Domain(format!(
            "pressure {} kPa outside [0, 300] kPa",
            args.pressure_kpa
        )));
    }
    let pressures = GroupPressures::from_polar(pressure, args.phi_deg.to_radians());
    let cfg = model.bend(args.spine_cm / 100.0, &pressures)?;
    let tip = forward_kinematics(&cfg, &model.geom);
    let p = cfg.pressures.0;
    println!(
        "spine {} cm, pressures {} {} {} kPa",
        sig4(args.spine_cm),
        sig4(p[0] / 1000.0),
        sig4(p[1] / 1000.0),
        sig4(p[2] / 1000.0)
    );
    println!("bend angle {} deg", sig4(cfg.bend_angle.to_degrees()));
    println!(
        "tip ({}, {}, {}) cm, reach {} cm",
        sig4(tip.position[0] * 100.0),
        sig4(tip.position[1] * 100.0),
        sig4(tip.position[2] * 100.0),
        sig4(tip.reach() * 100.0)
    );

    if let Some(path) = &args.svg {
        let (s, c) = cfg.bend_plane.sin_cos();
        let profile: Vec<(f64, f64)> = backbone(&cfg, 32)
            .iter()
            .map(|q| ((q[0] * c + q[1] * s) * 100.0, q[2] * 100.0))
            .collect();
        let mut plot = SvgPlot::new("bend profile", "in-plane reach (cm)", "height (cm)");
        plot.add_polyline(
            &format!("{} cm spine, {} kPa", sig4(args.spine_cm), sig4(args.pressure_kpa)),
            profile,
        );
        write(path, &plot.render())?;
    }
    Ok(())
}

fn plan_cmd(args: PlanArgs, geom: RobotGeometry, mat: MaterialParams) -> Result<(), Error> {
    let model = load_model(&args.model, geom, mat)?;
    let t = &args.target_cm;
    let mut req = PlanRequest::new([t[0] / 100.0, t[1] / 100.0, t[2] / 100.0]);
    req.tolerance = args.tol_mm / 1000.0;
    req.pressure_max = args.pressure_max_kpa * 1000.0;
    if let (Some(a), Some(tol)) = (args.angle_deg, args.angle_tol_deg) {
        req.angle_constraint = Some(AngleConstraint {
            angle: a.to_radians(),
            tolerance: tol.to_radians(),
        });
    }
    let mut p = plan(&req, &model)?;
    if args.compensate_bias {
        p.command_sequence = compensate_growth(&p.command_sequence, &LengthErrorModel::default());
    }
    let g = p.pressures.0;
    println!(
        "spine {} cm{}",
        sig4(p.spine_length * 100.0),
        if p.interpolated { " (between characterized lengths)" } else { "" }
    );
    println!(
        "pressures {} {} {} kPa",
        sig4(g[0] / 1000.0),
        sig4(g[1] / 1000.0),
        sig4(g[2] / 1000.0)
    );
    println!("bend angle {} deg", sig4(p.bend_angle.to_degrees()));
    println!(
        "predicted tip ({}, {}, {}) cm, error {} mm",
        sig4(p.predicted_tip[0] * 100.0),
        sig4(p.predicted_tip[1] * 100.0),
        sig4(p.predicted_tip[2] * 100.0),
        sig4(p.tip_error * 1000.0)
    );
    println!("commands:");
    for c in &p.command_sequence {
        println!("  {c}");
    }
    if let Some(path) = &args.emit_scenario {
        write(path, &scenario_script(&p.command_sequence))?;
    }
    if let Some(path) = &args.csv {
        write(path, &plan_csv(&p))?;
    }
    Ok(())
}

fn run_scenario_cmd(args: ScenarioArgs, geom: RobotGeometry, mat: MaterialParams) -> Result<(), Error> {
    let model = load_model(&args.model, geom, mat)?;
    let scenario = Scenario::load(&args.scenario)?;
    let options = RunOptions {
        seed: args.seed,
        lengths: if args.ideal {
            LengthErrorModel::ideal(model.geom.spine_max_length)
        } else {
            LengthErrorModel {
                max_length: model.geom.spine_max_length,
                ..LengthErrorModel::default()
            }
        },
    };
    let rows = run_scenario(&scenario, &model, &options)?;
    write(&args.out, &trajectory_csv(&rows))?;
    if let Some(path) = &args.svg {
        write(path, &tip_path_svg(&scenario.name, &rows))?;
    }
    if let Some(last) = rows.last() {
        println!(
            "{}: {} steps, final bend angle {} deg, tip ({}, {}, {}) cm",
            scenario.name,
            rows.len(),
            sig4(last.bend_angle.to_degrees()),
            sig4(last.tip[0] * 100.0),
            sig4(last.tip[1] * 100.0),
            sig4(last.tip[2] * 100.0)
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_significant_figures() {
        assert_eq!(sig4(65.6412), "65.64");
        assert_eq!(sig4(0.012345), "0.01235");
        assert_eq!(sig4(1234.4), "1234");
        assert_eq!(sig4(40.0), "40.00");
        assert_eq!(sig4(0.0), "0");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Unreachable { best_residual: 1.0 }), 3);
        assert_eq!(
            exit_code(&Error::Replay {
                line: 1,
                source: Box::new(Error::Domain("x".into()))
            }),
            4
        );
        assert_eq!(exit_code(&Error::Fit("x".into())), 2);
    }
}
