//! File formats: CSV tables, the TOML project configuration and the JSON
//! synthesis report.
//!
//! CSV dialect: comma separated, `.` decimal point, UTF-8, `#` comment lines
//! allowed anywhere. Real values are written with nine decimals, which keeps
//! millimeter and degree values within 5e-10 of the in-memory value.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::actuation::{Direction, MotorCalibration, Setpoint, SetpointSchedule};
use crate::analysis::{AngleSample, AngleSeries, ImuLog, ImuSample};
use crate::mechanism::{self, ElbowConfig, JointState, MechanismParams, PlanarPath, Point, Theta2Rule};
use crate::planner::{BoundaryJerk, CycleTiming, CycleWaypoints, ProfileSample};
use crate::synthesis::{Bounds, DesignVector, OptimizationResult, SynthesisOptions};
use crate::{Error, Result};

pub const PATH_HEADER: &[&str] = &["x_mm", "z_mm"];
pub const TIMED_PATH_HEADER: &[&str] = &["t_s", "x_mm", "z_mm"];
pub const IMU_HEADER: &[&str] = &["t_s", "zeta_x_deg", "zeta_y_deg", "zeta_z_deg"];
pub const ANGLE_HEADER: &[&str] = &["t_s", "angle_deg"];
pub const PROFILE_HEADER: &[&str] = &["t_s", "theta_deg", "omega_deg_s", "alpha_deg_s2"];
pub const SCHEDULE_HEADER: &[&str] = &["t_s", "m1_counts", "m2_counts"];
pub const CYCLE_ERROR_HEADER: &[&str] = &["cycle", "t_s", "error_deg"];

/// Number of samples in the bundled desired path.
pub const DEFAULT_PATH_SAMPLES: usize = 60;

/// A parsed CSV file: the header and numeric rows with their line numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<(u64, Vec<f64>)>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|(_, r)| r[k]).collect())
    }
}

/// Reads a numeric CSV with a header row.
pub fn read_table<R: Read>(reader: R, name: &Path) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let fmt = |message: String| Error::Format {
        path: name.to_path_buf(),
        message,
    };
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| fmt(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.iter().all(|h| h.is_empty()) {
        return Err(Error::EmptyFile(name.to_path_buf()));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::MalformedRow {
                path: name.to_path_buf(),
                line,
                message: e.to_string(),
            }
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let values = rec
            .iter()
            .enumerate()
            .map(|(k, cell)| {
                cell.parse::<f64>().map_err(|_| Error::MalformedRow {
                    path: name.to_path_buf(),
                    line,
                    message: format!("column `{}`: `{cell}` is not a number", header[k]),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((line, values));
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile(name.to_path_buf()));
    }
    Ok(Table { header, rows })
}

pub fn read_table_file(path: &Path) -> Result<Table> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_table(f, path)
}

fn expect_header(table: &Table, expected: &[&str], name: &Path) -> Result<()> {
    if table.header.iter().map(String::as_str).eq(expected.iter().copied()) {
        Ok(())
    } else {
        Err(Error::Format {
            path: name.to_path_buf(),
            message: format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                table.header.join(",")
            ),
        })
    }
}

/// Line-oriented CSV writer with a fixed header.
pub struct CsvWriter<W: Write> {
    out: W,
    path: PathBuf,
}

impl CsvWriter<BufWriter<File>> {
    pub fn create(path: &Path, comments: &[&str], header: &[&str]) -> Result<Self> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        CsvWriter::new(BufWriter::new(f), path, comments, header)
    }
}

impl<W: Write> CsvWriter<W> {
    pub fn new(out: W, path: &Path, comments: &[&str], header: &[&str]) -> Result<Self> {
        let mut w = Self {
            out,
            path: path.to_path_buf(),
        };
        for c in comments {
            w.line(&format!("# {c}"))?;
        }
        w.line(&header.join(","))?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}").map_err(|e| Error::io(&self.path, e))
    }

    pub fn reals(&mut self, values: &[f64]) -> Result<()> {
        let cells: Vec<String> = values.iter().map(|v| format!("{v:.9}")).collect();
        self.line(&cells.join(","))
    }

    pub fn raw(&mut self, cells: &[String]) -> Result<()> {
        self.line(&cells.join(","))
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.out)
    }
}

pub fn parse_path_csv<R: Read>(reader: R, name: &Path) -> Result<PlanarPath> {
    let table = read_table(reader, name)?;
    let timed = table.header.len() == 3;
    expect_header(&table, if timed { TIMED_PATH_HEADER } else { PATH_HEADER }, name)?;
    let off = usize::from(timed);
    let points = table.rows.iter().map(|(_, r)| Point::new(r[off], r[off + 1])).collect();
    let path = if timed {
        PlanarPath::with_timestamps(points, table.rows.iter().map(|(_, r)| r[0]).collect())
    } else {
        PlanarPath::new(points)
    };
    path.map_err(|e| Error::Format {
        path: name.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn load_path_csv(path: &Path) -> Result<PlanarPath> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_path_csv(f, path)
}

pub fn write_path_csv<W: Write>(out: W, name: &Path, path: &PlanarPath, comments: &[&str]) -> Result<W> {
    let header = if path.timestamps().is_some() {
        TIMED_PATH_HEADER
    } else {
        PATH_HEADER
    };
    let mut w = CsvWriter::new(out, name, comments, header)?;
    for (i, p) in path.points().iter().enumerate() {
        match path.timestamps() {
            Some(ts) => w.reals(&[ts[i], p.x, p.z])?,
            None => w.reals(&[p.x, p.z])?,
        }
    }
    w.finish()
}

pub fn save_path_csv(path: &PlanarPath, file: &Path, comments: &[&str]) -> Result<()> {
    let f = File::create(file).map_err(|e| Error::io(file, e))?;
    write_path_csv(BufWriter::new(f), file, path, comments).map(drop)
}

/// Stand-in for a recorded fingertip path: the prototype mechanism swept
/// across its input-angle range with a cosine ease-in/ease-out schedule.
pub fn default_desired_path() -> PlanarPath {
    let d = DesignVector::prototype();
    let n = DEFAULT_PATH_SAMPLES;
    let joints: Vec<JointState> = (0..n)
        .map(|i| {
            let u = i as f64 / (n - 1) as f64;
            let s = 0.5 * (1.0 - (std::f64::consts::PI * u).cos());
            JointState::new(
                d.theta1_start + (d.theta1_end - d.theta1_start) * s,
                d.theta2_start + (d.theta2_end - d.theta2_start) * s,
            )
        })
        .collect();
    mechanism::trace_path(&MechanismParams::prototype(), &joints).expect("prototype sweep is feasible")
}

pub const DEFAULT_PATH_COMMENTS: &[&str] = &[
    "SURROGATE desired fingertip path, not measured data.",
    "Generated by sweeping the prototype five-bar (l1 = 101.09, l2 = 108.67, l0 = 101.20 mm)",
    "from (153.55, 83.07) deg to (92.37, 40.44) deg with a cosine ease-in/ease-out schedule.",
];

pub fn read_imu_csv(path: &Path) -> Result<ImuLog> {
    let table = read_table_file(path)?;
    expect_header(&table, IMU_HEADER, path)?;
    ImuLog::new(
        table
            .rows
            .iter()
            .map(|(_, r)| ImuSample {
                t: r[0],
                zeta_x: r[1],
                zeta_y: r[2],
                zeta_z: r[3],
            })
            .collect(),
    )
    .map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_imu_csv(path: &Path, log: &ImuLog, comments: &[&str]) -> Result<()> {
    let mut w = CsvWriter::create(path, comments, IMU_HEADER)?;
    for s in log.samples() {
        w.reals(&[s.t, s.zeta_x, s.zeta_y, s.zeta_z])?;
    }
    w.finish().map(drop)
}

pub fn read_angle_csv(path: &Path) -> Result<AngleSeries> {
    let table = read_table_file(path)?;
    expect_header(&table, ANGLE_HEADER, path)?;
    AngleSeries::new(
        table
            .rows
            .iter()
            .map(|(_, r)| AngleSample { t: r[0], angle: r[1] })
            .collect(),
    )
    .map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_angle_csv(path: &Path, series: &AngleSeries) -> Result<()> {
    let mut w = CsvWriter::create(path, &[], ANGLE_HEADER)?;
    for s in series.samples() {
        w.reals(&[s.t, s.angle])?;
    }
    w.finish().map(drop)
}

/// Profile rows in degrees: position, velocity, acceleration.
pub fn write_profile_csv(path: &Path, samples: &[ProfileSample]) -> Result<()> {
    let mut w = CsvWriter::create(path, &[], PROFILE_HEADER)?;
    for s in samples {
        w.reals(&[
            s.t,
            s.position.to_degrees(),
            s.velocity.to_degrees(),
            s.acceleration.to_degrees(),
        ])?;
    }
    w.finish().map(drop)
}

/// Time grid and link angles (degrees) of a profile CSV.
pub fn read_profile_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let table = read_table_file(path)?;
    expect_header(&table, PROFILE_HEADER, path)?;
    Ok((
        table.rows.iter().map(|(_, r)| r[0]).collect(),
        table.rows.iter().map(|(_, r)| r[1]).collect(),
    ))
}

pub fn write_schedule_csv(path: &Path, rows: &[Setpoint]) -> Result<()> {
    let mut w = CsvWriter::create(path, &[], SCHEDULE_HEADER)?;
    for r in rows {
        w.raw(&[format!("{:.9}", r.t), r.counts[0].to_string(), r.counts[1].to_string()])?;
    }
    w.finish().map(drop)
}

pub fn read_schedule_csv(path: &Path) -> Result<SetpointSchedule> {
    let table = read_table_file(path)?;
    expect_header(&table, SCHEDULE_HEADER, path)?;
    let mut rows = Vec::with_capacity(table.rows.len());
    for (line, r) in &table.rows {
        let count = |v: f64| {
            if v.fract() == 0.0 && v.abs() < 9.0e15 {
                Ok(v as i64)
            } else {
                Err(Error::MalformedRow {
                    path: path.to_path_buf(),
                    line: *line,
                    message: format!("`{v}` is not an integer count"),
                })
            }
        };
        rows.push(Setpoint {
            t: r[0],
            counts: [count(r[1])?, count(r[2])?],
        });
    }
    SetpointSchedule::new(rows).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Design vector with angles in degrees, as stored in files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignRecord {
    pub l1_mm: f64,
    pub l2_mm: f64,
    pub l0_mm: f64,
    pub theta1_start_deg: f64,
    pub theta1_end_deg: f64,
    pub theta2_start_deg: f64,
    pub theta2_end_deg: f64,
}

impl From<&DesignVector> for DesignRecord {
    fn from(d: &DesignVector) -> Self {
        Self {
            l1_mm: d.l1,
            l2_mm: d.l2,
            l0_mm: d.l0,
            theta1_start_deg: d.theta1_start.to_degrees(),
            theta1_end_deg: d.theta1_end.to_degrees(),
            theta2_start_deg: d.theta2_start.to_degrees(),
            theta2_end_deg: d.theta2_end.to_degrees(),
        }
    }
}

impl From<&DesignRecord> for DesignVector {
    fn from(r: &DesignRecord) -> Self {
        Self {
            l1: r.l1_mm,
            l2: r.l2_mm,
            l0: r.l0_mm,
            theta1_start: r.theta1_start_deg.to_radians(),
            theta1_end: r.theta1_end_deg.to_radians(),
            theta2_start: r.theta2_start_deg.to_radians(),
            theta2_end: r.theta2_end_deg.to_radians(),
        }
    }
}

/// Synthesis report written by `synth` and read back by later steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesisReport<'a> {
    pub design: DesignRecord,
    pub error_mm: f64,
    pub converged: bool,
    pub stop_reason: crate::synthesis::StopReason,
    pub evaluations: usize,
    pub iterations: usize,
    pub constraint_report: crate::synthesis::ConstraintReport,
    pub history: &'a [(usize, f64)],
    pub starts: usize,
    pub best_start: usize,
    pub seed: u64,
}

impl<'a> SynthesisReport<'a> {
    pub fn new(r: &'a OptimizationResult, starts: usize, best_start: usize, seed: u64) -> Self {
        Self {
            design: DesignRecord::from(&r.best),
            error_mm: r.error_mm,
            converged: r.converged,
            stop_reason: r.stop_reason,
            evaluations: r.evaluations,
            iterations: r.history.last().map_or(0, |h| h.0),
            constraint_report: r.constraint_report,
            history: &r.history,
            starts,
            best_start,
            seed,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Reads the design vector out of a synthesis report.
pub fn read_report_design(path: &Path) -> Result<DesignVector> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    #[derive(Deserialize)]
    struct Partial {
        design: DesignRecord,
    }
    let p: Partial = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(DesignVector::from(&p.design))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismSection {
    pub l0: f64,
    pub l1: f64,
    pub l2: f64,
    #[serde(default)]
    pub theta2_rule: Theta2Rule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub lower: DesignRecord,
    pub upper: DesignRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisSection {
    pub max_iterations: usize,
    pub max_evaluations: usize,
    pub tolerance_mm: f64,
    pub starts: usize,
    pub seed: u64,
}

/// Link angles in degrees at 0, t_v1, t_f1, t_v2, t_f2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointsSection {
    pub m1_deg: [f64; 5],
    pub m2_deg: [f64; 5],
}

/// Boundary jerk in deg/s³.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JerkSection {
    pub start: f64,
    pub turnaround: f64,
    pub end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationEntry {
    pub motor: u8,
    pub counts_per_degree: f64,
    pub zero_angle_deg: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub period_s: f64,
    pub rate_hz: f64,
}

/// Project configuration. Motor 1 drives the crank at E (`theta2`), motor 2
/// the crank at A (`theta1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub mechanism: MechanismSection,
    pub elbows: ElbowConfig,
    pub bounds: BoundsSection,
    pub synthesis: SynthesisSection,
    pub timing: CycleTiming,
    #[serde(default)]
    pub jerk: JerkSection,
    pub waypoints: WaypointsSection,
    pub calibration: Vec<CalibrationEntry>,
    pub analysis: AnalysisSection,
}

pub const DEFAULT_CONFIG_TOML: &str = include_str!("../config/default.toml");

impl ProjectConfig {
    /// The prototype profile bundled with the crate.
    pub fn prototype() -> Self {
        let b = Bounds::default();
        let o = SynthesisOptions::default();
        let cal = |motor, c: MotorCalibration| CalibrationEntry {
            motor,
            counts_per_degree: c.counts_per_degree,
            zero_angle_deg: c.zero_angle_deg,
            direction: c.direction,
        };
        let p = MechanismParams::prototype();
        Self {
            mechanism: MechanismSection {
                l0: p.l0(),
                l1: p.l1(),
                l2: p.l2(),
                theta2_rule: Theta2Rule::Difference,
            },
            elbows: ElbowConfig::UP,
            bounds: BoundsSection {
                lower: DesignRecord::from(b.lower()),
                upper: DesignRecord::from(b.upper()),
            },
            synthesis: SynthesisSection {
                max_iterations: o.max_iterations,
                max_evaluations: o.max_evaluations,
                tolerance_mm: o.tolerance,
                starts: 1,
                seed: 0,
            },
            timing: CycleTiming::prototype(),
            jerk: JerkSection::default(),
            waypoints: WaypointsSection {
                m1_deg: [83.07, 35.99, 40.44, 35.99, 83.07],
                m2_deg: [153.55, 104.39, 92.37, 104.39, 153.55],
            },
            calibration: vec![
                cal(1, MotorCalibration::prototype_m1()),
                cal(2, MotorCalibration::prototype_m2()),
            ],
            analysis: AnalysisSection {
                period_s: 10.0,
                rate_hz: 100.0,
            },
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Loads `default` (the bundled profile) or a TOML file.
    pub fn load(spec: &str) -> Result<Self> {
        if spec == "default" {
            return Self::parse(DEFAULT_CONFIG_TOML);
        }
        let text = std::fs::read_to_string(spec).map_err(|e| Error::io(spec, e))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{spec}: {e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| Error::Config(e.to_string());
        self.params().map_err(cfg)?;
        self.bounds().map_err(cfg)?;
        self.calibrations().map_err(cfg)?;
        self.waypoints().map_err(cfg)?;
        if !(self.analysis.period_s > 0.0 && self.analysis.rate_hz > 0.0) {
            return Err(Error::Config("analysis period and rate must be positive".into()));
        }
        if !(self.synthesis.tolerance_mm >= 0.0) {
            return Err(Error::Config("synthesis tolerance must be non-negative".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> Result<MechanismParams> {
        MechanismParams::new(self.mechanism.l0, self.mechanism.l1, self.mechanism.l2)
    }

    pub fn bounds(&self) -> Result<Bounds> {
        Bounds::new((&self.bounds.lower).into(), (&self.bounds.upper).into())
    }

    pub fn synthesis_options(&self) -> SynthesisOptions {
        SynthesisOptions {
            max_iterations: self.synthesis.max_iterations,
            max_evaluations: self.synthesis.max_evaluations,
            tolerance: self.synthesis.tolerance_mm,
            ..SynthesisOptions::default()
        }
    }

    /// The configured mechanism with its start/end angles taken from the
    /// waypoint table.
    pub fn design(&self) -> DesignVector {
        let w = &self.waypoints;
        DesignVector {
            l1: self.mechanism.l1,
            l2: self.mechanism.l2,
            l0: self.mechanism.l0,
            theta1_start: w.m2_deg[0].to_radians(),
            theta1_end: w.m2_deg[2].to_radians(),
            theta2_start: w.m1_deg[0].to_radians(),
            theta2_end: w.m1_deg[2].to_radians(),
        }
    }

    /// Waypoints of motor 1 and motor 2.
    pub fn waypoints(&self) -> Result<[CycleWaypoints; 2]> {
        let w = |a: [f64; 5]| CycleWaypoints::from_degrees(a[0], a[1], a[2], a[3], a[4]);
        Ok([w(self.waypoints.m1_deg)?, w(self.waypoints.m2_deg)?])
    }

    pub fn jerk(&self) -> BoundaryJerk {
        BoundaryJerk {
            start: self.jerk.start.to_radians(),
            turnaround: self.jerk.turnaround.to_radians(),
            end: self.jerk.end.to_radians(),
        }
    }

    /// Calibrations of motor 1 and motor 2.
    pub fn calibrations(&self) -> Result<[MotorCalibration; 2]> {
        let find = |m: u8| -> Result<MotorCalibration> {
            let mut it = self.calibration.iter().filter(|c| c.motor == m);
            let c = it
                .next()
                .ok_or_else(|| Error::InvalidCalibration(format!("no calibration for motor {m}")))?;
            if it.next().is_some() {
                return Err(Error::InvalidCalibration(format!(
                    "duplicate calibration for motor {m}"
                )));
            }
            MotorCalibration::new(c.counts_per_degree, c.zero_angle_deg, c.direction)
        };
        if let Some(c) = self.calibration.iter().find(|c| c.motor != 1 && c.motor != 2) {
            return Err(Error::InvalidCalibration(format!("unknown motor id {}", c.motor)));
        }
        Ok([find(1)?, find(2)?])
    }
}
