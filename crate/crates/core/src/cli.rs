//! Command-line surface.
//!
//! Exit codes: 0 success, 2 usage, 3 unknown subcommand, 4 missing or invalid
//! argument, 5 file or configuration error, 6 domain error.

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::actuation::{self, SetpointSchedule};
use crate::analysis::{self, AngleSample, AngleSeries, Axis, ImuLog, ImuSample};
use crate::io::{self, ProjectConfig, SynthesisReport};
use crate::mechanism::{self, JointState, MechanismParams, PlanarPath, Point};
use crate::planner::{self, CycleWaypoints, PiecewiseQuintic};
use crate::plot::{self, PlotSpec};
use crate::synthesis::{self, DesignVector};
use crate::{Error, Execution, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNKNOWN_SUBCOMMAND: i32 = 3;
pub const EXIT_BAD_ARGUMENT: i32 = 4;
pub const EXIT_FILE: i32 = 5;
pub const EXIT_DOMAIN: i32 = 6;

#[derive(Debug, Parser)]
#[command(
    name = "fivebar",
    version,
    about = "Five-bar finger rehabilitator design and analysis toolkit"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// Project configuration: a TOML file or `default`.
    #[arg(long, default_value = "default")]
    config: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// End-effector position for two input angles (degrees).
    Fk {
        #[arg(long, allow_negative_numbers = true)]
        theta1: f64,
        #[arg(long, allow_negative_numbers = true)]
        theta2: f64,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Input angles (degrees) that place the end-effector at (x, z) mm.
    Ik {
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long, allow_negative_numbers = true)]
        z: f64,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Reachability report for a target point as JSON.
    Feas {
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long, allow_negative_numbers = true)]
        z: f64,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Fit link lengths and input-angle ranges to a desired path.
    Synth {
        /// Desired path CSV, or `default` for the bundled surrogate path.
        #[arg(long)]
        desired: String,
        /// Report JSON to write.
        #[arg(long)]
        out: PathBuf,
        /// Number of starts; start 0 is the configured design.
        #[arg(long)]
        starts: Option<usize>,
        /// Seed for the random starts; the configured seed by default.
        #[arg(long)]
        seed: Option<u64>,
        /// Run the starts one after another.
        #[arg(long)]
        sequential: bool,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Quintic joint profiles for both motors.
    Plan {
        /// Directory receiving m1_profile.csv and m2_profile.csv.
        #[arg(long)]
        out_dir: PathBuf,
        /// Sample rate in Hz; defaults to the configured analysis rate.
        #[arg(long)]
        rate: Option<f64>,
        /// Synthesis report whose start and end angles replace the configured
        /// ones. Via points keep their relative position.
        #[arg(long)]
        design: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Encoder setpoints from the two motor profiles.
    Schedule {
        /// Motor 1 profile CSV written by `plan`.
        #[arg(long)]
        m1: PathBuf,
        /// Motor 2 profile CSV on the same time grid.
        #[arg(long)]
        m2: PathBuf,
        /// Number of back-to-back cycles.
        #[arg(long, default_value_t = 1)]
        cycles: usize,
        /// Schedule CSV to write.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// First-order-lag playback of a setpoint schedule.
    Simulate {
        /// Schedule CSV written by `schedule`.
        #[arg(long)]
        schedule: PathBuf,
        /// Motor time constant in seconds.
        #[arg(long, default_value_t = 0.0)]
        lag: f64,
        /// Achieved encoder counts CSV to write.
        #[arg(long)]
        out: PathBuf,
        /// Also write the rotation angle the achieved motion would produce,
        /// as an IMU log.
        #[arg(long)]
        imu_out: Option<PathBuf>,
        /// Time span (s) over which the simulated travel direction is taken.
        #[arg(long, default_value_t = 0.2)]
        imu_baseline: f64,
        /// Synthesis report supplying the link lengths.
        #[arg(long)]
        design: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Per-cycle rotation-angle error of an IMU log against the plan.
    Analyze {
        /// IMU log CSV.
        #[arg(long)]
        imu: PathBuf,
        /// Directory receiving theoretical.csv, cycle_errors.csv and summary.json.
        #[arg(long)]
        out_dir: PathBuf,
        /// IMU channel compared with the theoretical angle.
        #[arg(long, value_enum, default_value_t = AxisArg::Y)]
        axis: AxisArg,
        /// Sample rate of the theoretical curve in Hz.
        #[arg(long)]
        rate: Option<f64>,
        /// How the measured angle is referenced to the theoretical one.
        #[arg(long, value_enum, default_value_t = Align::First)]
        align: Align,
        /// Synthesis report supplying the link lengths.
        #[arg(long)]
        design: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Render a CSV as an SVG line chart.
    Plot {
        /// Any CSV with a header row.
        #[arg(long)]
        input: PathBuf,
        /// SVG file to write.
        #[arg(long)]
        out: PathBuf,
        /// Column for the horizontal axis; the first column by default.
        #[arg(long)]
        x: Option<String>,
        /// Columns to draw; all others by default.
        #[arg(long, value_delimiter = ',')]
        y: Vec<String>,
        /// Column whose distinct values split the rows into separate lines.
        #[arg(long)]
        group: Option<String>,
        /// Chart title; the input file name by default.
        #[arg(long)]
        title: Option<String>,
    },
}

/// Offset handling for measured angles in `analyze`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Align {
    /// Shift each cycle so its first sample is zero, like the theoretical curve.
    First,
    /// Remove the mean difference to the theoretical curve.
    Mean,
    /// Compare raw angles.
    None,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AxisArg {
    X,
    Y,
    Z,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::X => Axis::X,
            AxisArg::Y => Axis::Y,
            AxisArg::Z => Axis::Z,
        }
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit status.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand | ErrorKind::MissingSubcommand => EXIT_USAGE,
                ErrorKind::InvalidSubcommand => EXIT_UNKNOWN_SUBCOMMAND,
                _ => EXIT_BAD_ARGUMENT,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => EXIT_BAD_ARGUMENT,
        e if e.is_file_error() => EXIT_FILE,
        _ => EXIT_DOMAIN,
    }
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Fk { theta1, theta2, config } => {
            let (_, params) = kinematic_setup(&config.config, None)?;
            let c = mechanism::forward_kinematics(&params, JointState::from_degrees(theta1, theta2))?;
            println!("x_mm,z_mm");
            println!("{:.9},{:.9}", c.x, c.z);
        }
        Command::Ik { x, z, config } => {
            let (cfg, params) = kinematic_setup(&config.config, None)?;
            let j =
                mechanism::inverse_kinematics_with(&params, Point::new(x, z), cfg.elbows, cfg.mechanism.theta2_rule)?;
            let (t1, t2) = j.to_degrees();
            println!("theta1_deg,theta2_deg");
            println!("{t1:.9},{t2:.9}");
        }
        Command::Feas { x, z, config } => {
            let (_, params) = kinematic_setup(&config.config, None)?;
            let report = mechanism::feasibility(&params, Point::new(x, z));
            println!("{}", serde_json::to_string(&report).expect("report serializes"));
        }
        Command::Synth {
            desired,
            out,
            starts,
            seed,
            sequential,
            config,
        } => synth(&config.config, &desired, &out, starts, seed, sequential)?,
        Command::Plan {
            out_dir,
            rate,
            design,
            config,
        } => plan(&config.config, &out_dir, rate, design.as_deref())?,
        Command::Schedule {
            m1,
            m2,
            cycles,
            out,
            config,
        } => schedule(&config.config, &m1, &m2, cycles, &out)?,
        Command::Simulate {
            schedule,
            lag,
            out,
            imu_out,
            imu_baseline,
            design,
            config,
        } => simulate(
            &config.config,
            &schedule,
            lag,
            &out,
            imu_out.as_deref(),
            imu_baseline,
            design.as_deref(),
        )?,
        Command::Analyze {
            imu,
            out_dir,
            axis,
            rate,
            align,
            design,
            config,
        } => analyze(
            &config.config,
            &imu,
            &out_dir,
            axis.into(),
            rate,
            align,
            design.as_deref(),
        )?,
        Command::Plot {
            input,
            out,
            x,
            y,
            group,
            title,
        } => {
            let table = io::read_table_file(&input)?;
            let title = title.unwrap_or_else(|| input.file_name().unwrap_or_default().to_string_lossy().into_owned());
            let svg = plot::render_svg(&table, &PlotSpec { title, x, y, group })?;
            std::fs::write(&out, svg).map_err(|e| Error::io(&out, e))?;
        }
    }
    Ok(())
}

/// Loads the configuration, applies an optional design report's lengths and
/// runs the kinematic self-test.
fn kinematic_setup(config: &str, design: Option<&Path>) -> Result<(ProjectConfig, MechanismParams)> {
    let cfg = ProjectConfig::load(config)?;
    let params = match design {
        Some(p) => io::read_report_design(p)?.params()?,
        None => cfg.params()?,
    };
    mechanism::self_test(&params, cfg.mechanism.theta2_rule)?;
    Ok((cfg, params))
}

fn positive_rate(rate: f64) -> Result<f64> {
    if rate.is_finite() && rate > 0.0 {
        Ok(rate)
    } else {
        Err(Error::InvalidArgument(format!("rate must be positive, got {rate}")))
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn synth(
    config: &str,
    desired: &str,
    out: &Path,
    starts: Option<usize>,
    seed: Option<u64>,
    sequential: bool,
) -> Result<()> {
    let (cfg, _) = kinematic_setup(config, None)?;
    let path = if desired == "default" {
        io::default_desired_path()
    } else {
        io::load_path_csv(Path::new(desired))?
    };
    let starts = starts.unwrap_or(cfg.synthesis.starts);
    if starts == 0 {
        return Err(Error::InvalidArgument("--starts must be at least 1".into()));
    }
    let seed = seed.unwrap_or(cfg.synthesis.seed);
    let exec = if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let bounds = cfg.bounds()?;
    let init = cfg.design();
    let ms = synthesis::synthesize_multistart(
        &path,
        &bounds,
        Some(&init),
        &cfg.synthesis_options(),
        starts,
        seed,
        exec,
    )?;
    let best = ms.best();
    io::write_json(out, &SynthesisReport::new(best, starts, ms.best_index, seed))?;
    println!(
        "E = {:.6} mm after {} evaluations ({:?})",
        best.error_mm, best.evaluations, best.stop_reason
    );
    Ok(())
}

/// Waypoints with start and extended angles moved to the design's, keeping
/// each via point at the same fraction of the stroke.
fn rescale_waypoints(w: &CycleWaypoints, start: f64, extended: f64) -> Result<CycleWaypoints> {
    let stroke = w.extended - w.start;
    let via = |v: f64| {
        if stroke.abs() < 1e-12 {
            start + (v - w.start)
        } else {
            start + (v - w.start) / stroke * (extended - start)
        }
    };
    CycleWaypoints::new(start, via(w.via1), extended, via(w.via2), start)
}

fn planned_motors(cfg: &ProjectConfig, design: Option<&DesignVector>) -> Result<[PiecewiseQuintic; 2]> {
    let [mut w1, mut w2] = cfg.waypoints()?;
    if let Some(d) = design {
        w1 = rescale_waypoints(&w1, d.theta2_start, d.theta2_end)?;
        w2 = rescale_waypoints(&w2, d.theta1_start, d.theta1_end)?;
    }
    let jerk = cfg.jerk();
    Ok([
        planner::plan_cycle(&w1, &cfg.timing, jerk)?,
        planner::plan_cycle(&w2, &cfg.timing, jerk)?,
    ])
}

fn plan(config: &str, out_dir: &Path, rate: Option<f64>, design: Option<&Path>) -> Result<()> {
    let cfg = ProjectConfig::load(config)?;
    let rate = positive_rate(rate.unwrap_or(cfg.analysis.rate_hz))?;
    let design = design.map(io::read_report_design).transpose()?;
    let plans = planned_motors(&cfg, design.as_ref())?;
    ensure_dir(out_dir)?;
    for (k, p) in plans.iter().enumerate() {
        let file = out_dir.join(format!("m{}_profile.csv", k + 1));
        io::write_profile_csv(&file, &p.sample(rate)?)?;
    }
    println!("wrote {}", out_dir.display());
    Ok(())
}

fn schedule(config: &str, m1: &Path, m2: &Path, cycles: usize, out: &Path) -> Result<()> {
    let cfg = ProjectConfig::load(config)?;
    if cycles == 0 {
        return Err(Error::InvalidArgument("--cycles must be at least 1".into()));
    }
    let (t1, a1) = io::read_profile_csv(m1)?;
    let (t2, a2) = io::read_profile_csv(m2)?;
    if t1.len() != t2.len() || t1.iter().zip(&t2).any(|(a, b)| (a - b).abs() > 1e-9) {
        return Err(Error::InvalidSchedule(
            "motor profiles are sampled on different time grids".into(),
        ));
    }
    let [c1, c2] = cfg.calibrations()?;
    let sched = actuation::schedule_from_angles(&t1, [&a1, &a2], [&c1, &c2])?.repeated(cycles)?;
    io::write_schedule_csv(out, sched.rows())?;
    println!("{} setpoints", sched.len());
    Ok(())
}

/// End-effector positions with over-stretched poses saturated; warns on
/// stderr when any were.
fn trace_saturated(params: &MechanismParams, joints: &[JointState], what: &str) -> Result<Vec<Point>> {
    let mut saturated = 0;
    let pts = joints
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let (c, s) = mechanism::forward_kinematics_saturated(params, j).map_err(|e| Error::AtIndex {
                index: i,
                source: Box::new(e),
            })?;
            saturated += usize::from(s);
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    if saturated > 0 {
        eprintln!(
            "warning: {saturated} of {} {what} poses put the elbows more than 2·l2 apart; the couplers were held collinear there",
            joints.len()
        );
    }
    Ok(pts)
}

/// Smallest travel across one direction window of the simulated IMU.
pub const MIN_TRAVEL_MM: f64 = 1.0;

/// Rotation angle of the simulated motion, one value per row. The travel
/// direction at row i is taken across the rows nearest t_i ± baseline/2, which
/// averages out the encoder staircase. Windows where the end-effector travels
/// less than [`MIN_TRAVEL_MM`] hold the previous angle; leading ones take the
/// first defined angle.
fn rotation_from_positions(
    cfg: &ProjectConfig,
    params: &MechanismParams,
    positions: &[(f64, [f64; 2])],
    baseline: f64,
) -> Result<Vec<f64>> {
    let [c1, c2] = cfg.calibrations()?;
    let joints: Vec<JointState> = positions
        .iter()
        .map(|&(t, y)| JointState::from_degrees(c2.position_to_degrees(y[1]), c1.position_to_degrees(y[0])).at(t))
        .collect();
    let pts = trace_saturated(params, &joints, "simulated")?;
    let times: Vec<f64> = positions.iter().map(|p| p.0).collect();
    let n = pts.len();
    let mut angles: Vec<Option<f64>> = vec![None; n];
    for i in 0..n {
        let lo = times
            .partition_point(|&t| t <= times[i] - 0.5 * baseline)
            .saturating_sub(1);
        let hi = times.partition_point(|&t| t < times[i] + 0.5 * baseline).min(n - 1);
        let (lo, hi) = if lo == hi {
            (lo.saturating_sub(1), (hi + 1).min(n - 1))
        } else {
            (lo, hi)
        };
        let (dr, dp) = (pts[hi].x - pts[lo].x, pts[hi].z - pts[lo].z);
        if dr.hypot(dp) >= MIN_TRAVEL_MM {
            angles[i] = Some(dp.abs().atan2(dr.abs()).to_degrees());
        }
    }
    let mut held = angles.iter().flatten().next().copied().unwrap_or(0.0);
    Ok(angles
        .into_iter()
        .map(|a| {
            if let Some(a) = a {
                held = a;
            }
            held
        })
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    config: &str,
    schedule: &Path,
    lag: f64,
    out: &Path,
    imu_out: Option<&Path>,
    baseline: f64,
    design: Option<&Path>,
) -> Result<()> {
    if !(lag.is_finite() && lag >= 0.0) {
        return Err(Error::InvalidArgument(format!("--lag must be non-negative, got {lag}")));
    }
    if !(baseline.is_finite() && baseline >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "--imu-baseline must be non-negative, got {baseline}"
        )));
    }
    let sched: SetpointSchedule = io::read_schedule_csv(schedule)?;
    let achieved = actuation::simulate_encoder_playback(&sched, lag)?;
    io::write_schedule_csv(out, &achieved)?;
    if let Some(imu_path) = imu_out {
        let (cfg, params) = kinematic_setup(config, design)?;
        let positions = actuation::simulate_motor_positions(&sched, lag)?;
        let zeta = rotation_from_positions(&cfg, &params, &positions, baseline)?;
        let log = ImuLog::new(
            achieved
                .iter()
                .zip(&zeta)
                .map(|(r, &z)| ImuSample {
                    t: r.t,
                    zeta_x: 0.0,
                    zeta_y: z,
                    zeta_z: 0.0,
                })
                .collect(),
        )?;
        io::write_imu_csv(
            imu_path,
            &log,
            &["Simulated log: zeta_y is the rotation angle of the achieved motion, zeta_x and zeta_z are zero."],
        )?;
    }
    println!("{} samples", achieved.len());
    Ok(())
}

/// Offset-aligned theoretical rotation over the flexion-to-extension window,
/// on the `rate` grid.
pub fn theoretical_window(
    cfg: &ProjectConfig,
    params: &MechanismParams,
    design: Option<&DesignVector>,
    rate: f64,
) -> Result<AngleSeries> {
    let plans = planned_motors(cfg, design)?;
    let window = cfg.timing.t_f1();
    let times: Vec<f64> = planner::sample_times(plans[0].duration(), rate)?
        .into_iter()
        .filter(|&t| t <= window + 1e-9)
        .collect();
    let joints = times
        .iter()
        .map(|&t| {
            Ok(JointState::new(
                plans[1].evaluate(t, planner::Derivative::Position)?,
                plans[0].evaluate(t, planner::Derivative::Position)?,
            )
            .at(t))
        })
        .collect::<Result<Vec<_>>>()?;
    let pts = trace_saturated(params, &joints, "planned")?;
    let path = PlanarPath::with_timestamps(pts, times)?;
    analysis::align_offset(&analysis::theoretical_rotation(&path)?)
}

#[derive(Serialize)]
struct CycleSummary {
    cycle: usize,
    samples: usize,
    rms_deg: f64,
    max_abs_deg: f64,
}

#[derive(Serialize)]
struct AnalysisSummary {
    axis: &'static str,
    period_s: f64,
    window_s: f64,
    align: Align,
    cycles: Vec<CycleSummary>,
}

fn analyze(
    config: &str,
    imu: &Path,
    out_dir: &Path,
    axis: Axis,
    rate: Option<f64>,
    align: Align,
    design: Option<&Path>,
) -> Result<()> {
    let (cfg, params) = kinematic_setup(config, design)?;
    let design = design.map(io::read_report_design).transpose()?;
    let rate = positive_rate(rate.unwrap_or(cfg.analysis.rate_hz))?;
    let log = io::read_imu_csv(imu)?;
    let theoretical = theoretical_window(&cfg, &params, design.as_ref(), rate)?;
    let window = cfg.timing.t_f1();
    let cycles = analysis::split_cycles(&log, cfg.analysis.period_s)?;
    if cycles.is_empty() {
        return Err(Error::InvalidLog(format!(
            "log spans less than one {} s cycle",
            cfg.analysis.period_s
        )));
    }

    ensure_dir(out_dir)?;
    io::write_angle_csv(&out_dir.join("theoretical.csv"), &theoretical)?;
    let err_path = out_dir.join("cycle_errors.csv");
    let mut w = io::CsvWriter::create(&err_path, &[], io::CYCLE_ERROR_HEADER)?;
    let mut summaries = Vec::with_capacity(cycles.len());
    for (k, cycle) in cycles.iter().enumerate() {
        let measured = cycle.channel(axis).window(0.0, window + 1e-9);
        let ce = match align {
            Align::First => analysis::cycle_error(&analysis::align_offset(&measured)?, &theoretical)?,
            Align::Mean => analysis::cycle_error(&measured, &theoretical)?.without_mean_offset(),
            Align::None => analysis::cycle_error(&measured, &theoretical)?,
        };
        for AngleSample { t, angle } in ce.series.samples() {
            w.raw(&[(k + 1).to_string(), format!("{t:.9}"), format!("{angle:.9}")])?;
        }
        summaries.push(CycleSummary {
            cycle: k + 1,
            samples: measured.len(),
            rms_deg: ce.rms,
            max_abs_deg: ce.max_abs,
        });
    }
    w.finish()?;
    for s in &summaries {
        println!(
            "cycle {}: rms {:.4} deg, max {:.4} deg",
            s.cycle, s.rms_deg, s.max_abs_deg
        );
    }
    io::write_json(
        &out_dir.join("summary.json"),
        &AnalysisSummary {
            axis: match axis {
                Axis::X => "x",
                Axis::Y => "y",
                Axis::Z => "z",
            },
            period_s: cfg.analysis.period_s,
            window_s: window,
            align,
            cycles: summaries,
        },
    )
}
