use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid mechanism parameters: {0}")]
    InvalidParams(String),

    #[error("infeasible configuration: elbow distance {elbow_distance} mm (coupler length {coupler} mm)")]
    InfeasibleConfiguration { elbow_distance: f64, coupler: f64 },

    #[error("unreachable target ({x}, {z}) mm: r1 = {r1}, r2 = {r2}")]
    UnreachableTarget { x: f64, z: f64, r1: f64, r2: f64 },

    #[error("at index {index}: {source}")]
    AtIndex {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("scale factor must be positive, got {0}")]
    NonPositiveFactor(f64),

    #[error("kinematic self-test failed: round-trip error {error} rad at probe ({theta1}, {theta2}) rad")]
    SelfTestFailed { theta1: f64, theta2: f64, error: f64 },

    #[error("invalid design vector: {0}")]
    InvalidDesign(String),

    #[error("invalid bounds: {0}")]
    InvalidBounds(String),

    #[error("initial design component `{component}` = {value} lies outside [{lower}, {upper}]")]
    InitOutOfBounds {
        component: &'static str,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("invalid cycle timing: {0}")]
    InvalidTiming(String),

    #[error("invalid waypoints: {0}")]
    InvalidWaypoints(String),

    #[error("singular linear system (reciprocal condition {rcond:e})")]
    SingularSystem { rcond: f64 },

    #[error("time {t} s outside trajectory domain [0, {end}] s")]
    OutOfDomain { t: f64, end: f64 },

    #[error("rate must be positive, got {0}")]
    NonPositiveRate(f64),

    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("path needs at least 2 points, got {0}")]
    TooShortPath(usize),

    #[error("degenerate step at index {index}: end-effector is stationary")]
    DegenerateStep { index: usize },

    #[error("empty series")]
    EmptySeries,

    #[error("invalid IMU log: {0}")]
    InvalidLog(String),

    #[error("cycle period must be positive, got {0}")]
    InvalidPeriod(f64),

    #[error("{path}: line {line}: {message}")]
    MalformedRow { path: PathBuf, line: u64, message: String },

    #[error("{0}: file contains no data rows")]
    EmptyFile(PathBuf),

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn at(index: usize, source: Error) -> Self {
        Error::AtIndex {
            index,
            source: Box::new(source),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that originate from reading or writing files.
    pub fn is_file_error(&self) -> bool {
        matches!(
            self,
            Error::MalformedRow { .. }
                | Error::EmptyFile(_)
                | Error::Format { .. }
                | Error::Io { .. }
                | Error::Config(_)
        )
    }
}
