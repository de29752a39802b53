//! Rotation angle of the end-effector: the theoretical angle from the
//! direction of travel between consecutive path samples, and its comparison
//! against IMU logs cycle by cycle.

use serde::Serialize;

use crate::mechanism::PlanarPath;
use crate::{Error, Result};

/// Steps shorter than this in both components are treated as stationary.
pub const STATIONARY_STEP_MM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImuSample {
    pub t: f64,
    pub zeta_x: f64,
    pub zeta_y: f64,
    pub zeta_z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// IMU rotation angles in degrees against time in seconds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImuLog {
    samples: Vec<ImuSample>,
}

impl ImuLog {
    pub fn new(samples: Vec<ImuSample>) -> Result<Self> {
        if samples.iter().any(|s| !s.t.is_finite()) {
            return Err(Error::InvalidLog("non-finite timestamp".into()));
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].t < w[0].t) {
            return Err(Error::InvalidLog(format!("timestamps decrease at sample {}", i + 1)));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[ImuSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Median spacing between samples, or 0 for fewer than two samples.
    pub fn sample_interval(&self) -> f64 {
        let mut dts: Vec<f64> = self.samples.windows(2).map(|w| w[1].t - w[0].t).collect();
        if dts.is_empty() {
            return 0.0;
        }
        dts.sort_by(f64::total_cmp);
        dts[dts.len() / 2]
    }

    /// Time covered by the log, counting one sample interval per sample.
    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t + self.sample_interval(),
            _ => 0.0,
        }
    }

    /// One channel as an angle series, time measured from the first sample.
    pub fn channel(&self, axis: Axis) -> AngleSeries {
        let t0 = self.samples.first().map_or(0.0, |s| s.t);
        AngleSeries {
            samples: self
                .samples
                .iter()
                .map(|s| AngleSample {
                    t: s.t - t0,
                    angle: match axis {
                        Axis::X => s.zeta_x,
                        Axis::Y => s.zeta_y,
                        Axis::Z => s.zeta_z,
                    },
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngleSample {
    /// Seconds, or the sample index for untimed paths.
    pub t: f64,
    /// Degrees.
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleSeries {
    samples: Vec<AngleSample>,
}

impl AngleSeries {
    pub fn new(samples: Vec<AngleSample>) -> Result<Self> {
        if samples.iter().any(|s| !(s.t.is_finite() && s.angle.is_finite())) {
            return Err(Error::InvalidLog("non-finite angle sample".into()));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[AngleSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn angles(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.angle)
    }

    /// Samples with `t` in `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> AngleSeries {
        AngleSeries {
            samples: self
                .samples
                .iter()
                .copied()
                .filter(|s| s.t >= lo && s.t <= hi)
                .collect(),
        }
    }

    /// Linear interpolation at `t`, holding the end values outside the range.
    pub fn interpolate(&self, t: f64) -> Option<f64> {
        let s = &self.samples;
        let first = s.first()?;
        let last = s.last()?;
        if t <= first.t {
            return Some(first.angle);
        }
        if t >= last.t {
            return Some(last.angle);
        }
        let k = s.partition_point(|p| p.t <= t);
        let (a, b) = (s[k - 1], s[k]);
        if b.t == a.t {
            return Some(b.angle);
        }
        Some(a.angle + (b.angle - a.angle) * (t - a.t) / (b.t - a.t))
    }
}

/// Displacement between consecutive path samples: x component, z component.
pub fn relative_vectors(path: &PlanarPath) -> Result<Vec<(f64, f64)>> {
    let pts = path.points();
    if pts.len() < 2 {
        return Err(Error::TooShortPath(pts.len()));
    }
    Ok(pts.windows(2).map(|w| (w[1].x - w[0].x, w[1].z - w[0].z)).collect())
}

/// Angle of travel to the horizontal, atan|Δz/Δx| in degrees, one value per
/// step. Step i is stamped with the time (or index) of its later sample.
pub fn theoretical_rotation(path: &PlanarPath) -> Result<AngleSeries> {
    let steps = relative_vectors(path)?;
    let samples = steps
        .iter()
        .enumerate()
        .map(|(i, &(dr, dp))| {
            if dr.abs() < STATIONARY_STEP_MM && dp.abs() < STATIONARY_STEP_MM {
                return Err(Error::DegenerateStep { index: i + 1 });
            }
            let t = path.timestamps().map_or((i + 1) as f64, |ts| ts[i + 1]);
            Ok(AngleSample {
                t,
                angle: dp.abs().atan2(dr.abs()).to_degrees(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AngleSeries { samples })
}

/// Shifts the series so its first value is zero.
pub fn align_offset(series: &AngleSeries) -> Result<AngleSeries> {
    let first = series.samples.first().ok_or(Error::EmptySeries)?.angle;
    Ok(AngleSeries {
        samples: series
            .samples
            .iter()
            .map(|s| AngleSample {
                t: s.t,
                angle: s.angle - first,
            })
            .collect(),
    })
}

/// Splits a log into consecutive windows of `period` seconds starting at the
/// first sample. Only complete windows are returned.
pub fn split_cycles(log: &ImuLog, period: f64) -> Result<Vec<ImuLog>> {
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::InvalidPeriod(period));
    }
    let Some(first) = log.samples.first() else {
        return Ok(Vec::new());
    };
    let complete = (log.duration() / period + 1e-9).floor() as usize;
    let mut cycles = vec![Vec::new(); complete];
    for s in &log.samples {
        let k = ((s.t - first.t) / period + 1e-9).floor() as usize;
        if k < complete {
            cycles[k].push(*s);
        }
    }
    Ok(cycles.into_iter().map(|samples| ImuLog { samples }).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleError {
    pub series: AngleSeries,
    pub rms: f64,
    pub max_abs: f64,
}

impl CycleError {
    /// The same comparison after shifting the measured series by the constant
    /// that zeroes the mean error.
    pub fn without_mean_offset(&self) -> CycleError {
        let n = self.series.samples.len() as f64;
        let mean = self.series.samples.iter().map(|s| s.angle).sum::<f64>() / n;
        let samples: Vec<AngleSample> = self
            .series
            .samples
            .iter()
            .map(|s| AngleSample {
                t: s.t,
                angle: s.angle - mean,
            })
            .collect();
        let (rms, max_abs) = error_stats(&samples);
        CycleError {
            series: AngleSeries { samples },
            rms,
            max_abs,
        }
    }
}

fn error_stats(samples: &[AngleSample]) -> (f64, f64) {
    let n = samples.len() as f64;
    let rms = (samples.iter().map(|s| s.angle * s.angle).sum::<f64>() / n).sqrt();
    let max_abs = samples.iter().fold(0.0_f64, |m, s| m.max(s.angle.abs()));
    (rms, max_abs)
}

/// Measured minus theoretical angle on the theoretical time grid, with the
/// measured series linearly interpolated onto it.
pub fn cycle_error(measured: &AngleSeries, theoretical: &AngleSeries) -> Result<CycleError> {
    if measured.is_empty() || theoretical.is_empty() {
        return Err(Error::EmptySeries);
    }
    let samples: Vec<AngleSample> = theoretical
        .samples
        .iter()
        .map(|s| AngleSample {
            t: s.t,
            angle: measured.interpolate(s.t).expect("non-empty") - s.angle,
        })
        .collect();
    let (rms, max_abs) = error_stats(&samples);
    Ok(CycleError {
        series: AngleSeries { samples },
        rms,
        max_abs,
    })
}
