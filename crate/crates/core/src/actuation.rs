//! Link angle ↔ encoder count mapping, setpoint schedules and a first-order
//! playback model of the motors.

use serde::{Deserialize, Serialize};

use crate::planner::{sample_times, PiecewiseQuintic};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Direction {
    #[default]
    Forward,
    Reverse,
}

impl Direction {
    pub fn value(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Reverse => -1.0,
        }
    }
}

impl TryFrom<i8> for Direction {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Direction::Forward),
            -1 => Ok(Direction::Reverse),
            _ => Err(format!("direction must be +1 or -1, got {v}")),
        }
    }
}

impl From<Direction> for i8 {
    fn from(d: Direction) -> i8 {
        match d {
            Direction::Forward => 1,
            Direction::Reverse => -1,
        }
    }
}

/// Affine map between a link angle and its motor's encoder count.
///
/// With `Forward` direction, angles below `zero_angle_deg` give positive
/// counts: counts = round((zero_angle_deg − angle) · counts_per_degree).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotorCalibration {
    pub counts_per_degree: f64,
    pub zero_angle_deg: f64,
    #[serde(default)]
    pub direction: Direction,
}

impl MotorCalibration {
    pub fn new(counts_per_degree: f64, zero_angle_deg: f64, direction: Direction) -> Result<Self> {
        let c = Self {
            counts_per_degree,
            zero_angle_deg,
            direction,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.counts_per_degree.is_finite() && self.counts_per_degree > 0.0) {
            return Err(Error::InvalidCalibration(format!(
                "counts_per_degree must be positive, got {}",
                self.counts_per_degree
            )));
        }
        if !self.zero_angle_deg.is_finite() {
            return Err(Error::InvalidCalibration("zero_angle_deg must be finite".into()));
        }
        Ok(())
    }

    /// Motor 1 (L4 link): encoder zero at 83.07°, 201 counts at 35.99°.
    pub fn prototype_m1() -> Self {
        Self {
            counts_per_degree: 4.269,
            zero_angle_deg: 83.07,
            direction: Direction::Forward,
        }
    }

    /// Motor 2 (L1 link): encoder zero at 153.55°, 379 counts at 104.39°.
    pub fn prototype_m2() -> Self {
        Self {
            counts_per_degree: 7.7095,
            zero_angle_deg: 153.55,
            direction: Direction::Forward,
        }
    }

    /// Rounds half away from zero.
    pub fn degrees_to_counts(&self, angle_deg: f64) -> i64 {
        (self.direction.value() * (self.zero_angle_deg - angle_deg) * self.counts_per_degree).round() as i64
    }

    pub fn counts_to_degrees(&self, counts: i64) -> f64 {
        self.position_to_degrees(counts as f64)
    }

    /// Inverse map for a motor position between counts.
    pub fn position_to_degrees(&self, position: f64) -> f64 {
        self.zero_angle_deg - self.direction.value() * position / self.counts_per_degree
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Setpoint {
    pub t: f64,
    pub counts: [i64; 2],
}

/// Time-stamped encoder setpoints for both motors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetpointSchedule {
    rows: Vec<Setpoint>,
}

impl SetpointSchedule {
    pub fn new(rows: Vec<Setpoint>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidSchedule("no setpoints".into()));
        }
        if rows.iter().any(|r| !r.t.is_finite()) {
            return Err(Error::InvalidSchedule("non-finite timestamp".into()));
        }
        if let Some(i) = rows.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(Error::InvalidSchedule(format!(
                "timestamps not strictly increasing at row {}",
                i + 1
            )));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Setpoint] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Plays the schedule `cycles` times back to back. The duplicated
    /// boundary sample between consecutive cycles is kept once.
    pub fn repeated(&self, cycles: usize) -> Result<Self> {
        if cycles == 0 {
            return Err(Error::InvalidSchedule("cycle count must be positive".into()));
        }
        let t0 = self.rows[0].t;
        let period = self.rows[self.rows.len() - 1].t - t0;
        let mut rows = self.rows.clone();
        for c in 1..cycles {
            let offset = period * c as f64;
            rows.extend(self.rows[1..].iter().map(|r| Setpoint {
                t: r.t + offset,
                counts: r.counts,
            }));
        }
        Self::new(rows)
    }
}

/// Converts per-motor angle samples (degrees) on a shared time grid.
pub fn schedule_from_angles(
    times: &[f64],
    angles_deg: [&[f64]; 2],
    cals: [&MotorCalibration; 2],
) -> Result<SetpointSchedule> {
    if angles_deg.iter().any(|a| a.len() != times.len()) {
        return Err(Error::InvalidSchedule(
            "motor columns differ in length from the time grid".into(),
        ));
    }
    for c in cals {
        c.validate()?;
    }
    let rows = times
        .iter()
        .enumerate()
        .map(|(i, &t)| Setpoint {
            t,
            counts: [
                cals[0].degrees_to_counts(angles_deg[0][i]),
                cals[1].degrees_to_counts(angles_deg[1][i]),
            ],
        })
        .collect();
    SetpointSchedule::new(rows)
}

/// Samples both motor plans at `rate` and converts them to counts.
pub fn schedule_from_plan(
    plans: [&PiecewiseQuintic; 2],
    cals: [&MotorCalibration; 2],
    rate: f64,
) -> Result<SetpointSchedule> {
    if plans[0].duration() != plans[1].duration() {
        return Err(Error::InvalidSchedule(format!(
            "motor plans differ in duration: {} s vs {} s",
            plans[0].duration(),
            plans[1].duration()
        )));
    }
    let times = sample_times(plans[0].duration(), rate)?;
    let angles = plans.map(|p| {
        p.sample(rate)
            .map(|s| s.iter().map(|s| s.position.to_degrees()).collect::<Vec<_>>())
    });
    let [a0, a1] = angles;
    let (a0, a1) = (a0?, a1?);
    schedule_from_angles(&times, [&a0, &a1], cals)
}

/// First-order-lag playback of a setpoint schedule.
///
/// Over each interval (t_{k−1}, t_k] the motor is driven toward setpoint k,
/// so the state obeys y_k = s_k + (y_{k−1} − s_k)·exp(−Δt/τ). The motor
/// starts at the first setpoint. Reported counts are rounded half away from
/// zero; a lag of zero reproduces the schedule exactly.
pub fn simulate_encoder_playback(schedule: &SetpointSchedule, lag: f64) -> Result<Vec<Setpoint>> {
    Ok(simulate_motor_positions(schedule, lag)?
        .into_iter()
        .map(|(t, y)| Setpoint {
            t,
            counts: y.map(|y| y.round() as i64),
        })
        .collect())
}

/// Unrounded motor positions (counts) of [`simulate_encoder_playback`].
pub fn simulate_motor_positions(schedule: &SetpointSchedule, lag: f64) -> Result<Vec<(f64, [f64; 2])>> {
    if !(lag.is_finite() && lag >= 0.0) {
        return Err(Error::InvalidSchedule(format!(
            "lag time constant must be non-negative, got {lag}"
        )));
    }
    let rows = schedule.rows();
    let mut state = rows[0].counts.map(|c| c as f64);
    let mut out = Vec::with_capacity(rows.len());
    out.push((rows[0].t, state));
    for w in rows.windows(2) {
        let target = w[1].counts.map(|c| c as f64);
        let decay = if lag == 0.0 {
            0.0
        } else {
            (-(w[1].t - w[0].t) / lag).exp()
        };
        for m in 0..2 {
            state[m] = target[m] + (state[m] - target[m]) * decay;
        }
        out.push((w[1].t, state));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{plan_cycle, BoundaryJerk, CycleTiming, CycleWaypoints};

    #[test]
    fn m1_fixture_rows() {
        let c = MotorCalibration::prototype_m1();
        assert_eq!(c.degrees_to_counts(83.07), 0);
        assert_eq!(c.degrees_to_counts(35.99), 201);
        let back = c.counts_to_degrees(201);
        assert!((back - 35.99).abs() <= 0.5 / c.counts_per_degree);
        assert_eq!(c.counts_to_degrees(0), 83.07);
    }

    #[test]
    fn m2_fixture_rows() {
        let c = MotorCalibration::prototype_m2();
        assert_eq!(c.degrees_to_counts(153.55), 0);
        assert_eq!(c.degrees_to_counts(104.39), 379);
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        let c = MotorCalibration::new(1.0, 0.0, Direction::Forward).unwrap();
        assert_eq!(c.degrees_to_counts(-2.5), 3);
        assert_eq!(c.degrees_to_counts(2.5), -3);
    }

    #[test]
    fn reverse_direction_flips_sign() {
        let f = MotorCalibration::new(4.0, 10.0, Direction::Forward).unwrap();
        let r = MotorCalibration::new(4.0, 10.0, Direction::Reverse).unwrap();
        assert_eq!(f.degrees_to_counts(5.0), -r.degrees_to_counts(5.0));
        assert_eq!(r.counts_to_degrees(r.degrees_to_counts(5.0)), 5.0);
    }

    #[test]
    fn rejects_bad_calibration() {
        assert!(MotorCalibration::new(0.0, 10.0, Direction::Forward).is_err());
        assert!(MotorCalibration::new(-1.0, 10.0, Direction::Forward).is_err());
        assert!(Direction::try_from(0).is_err());
    }

    fn plans() -> (PiecewiseQuintic, PiecewiseQuintic) {
        let timing = CycleTiming::prototype();
        let m1 = CycleWaypoints::from_degrees(83.07, 35.99, 40.44, 35.99, 83.07).unwrap();
        let m2 = CycleWaypoints::from_degrees(153.55, 104.39, 92.37, 104.39, 153.55).unwrap();
        (
            plan_cycle(&m1, &timing, BoundaryJerk::default()).unwrap(),
            plan_cycle(&m2, &timing, BoundaryJerk::default()).unwrap(),
        )
    }

    #[test]
    fn schedule_hits_table_counts_at_vias() {
        let (p1, p2) = plans();
        let (c1, c2) = (MotorCalibration::prototype_m1(), MotorCalibration::prototype_m2());
        let s = schedule_from_plan([&p1, &p2], [&c1, &c2], 0.4).unwrap();
        let times: Vec<f64> = s.rows().iter().map(|r| r.t).collect();
        assert_eq!(times, vec![0.0, 2.5, 5.0, 7.5, 10.0]);
        assert_eq!(s.rows()[0].counts, [0, 0]);
        assert_eq!(s.rows()[1].counts, [201, 379]);
        assert_eq!(s.rows()[3].counts, [201, 379]);
        assert_eq!(s.rows()[4].counts, [0, 0]);
    }

    #[test]
    fn zero_motion_plan_gives_zero_counts() {
        let timing = CycleTiming::prototype();
        let c1 = MotorCalibration::prototype_m1();
        let c2 = MotorCalibration::prototype_m2();
        let w1 = CycleWaypoints::from_degrees(83.07, 83.07, 83.07, 83.07, 83.07).unwrap();
        let w2 = CycleWaypoints::from_degrees(153.55, 153.55, 153.55, 153.55, 153.55).unwrap();
        let p1 = plan_cycle(&w1, &timing, BoundaryJerk::default()).unwrap();
        let p2 = plan_cycle(&w2, &timing, BoundaryJerk::default()).unwrap();
        let s = schedule_from_plan([&p1, &p2], [&c1, &c2], 50.0).unwrap();
        assert!(s.rows().iter().all(|r| r.counts == [0, 0]));
    }

    #[test]
    fn zero_lag_is_lossless() {
        let (p1, p2) = plans();
        let (c1, c2) = (MotorCalibration::prototype_m1(), MotorCalibration::prototype_m2());
        let s = schedule_from_plan([&p1, &p2], [&c1, &c2], 100.0).unwrap();
        assert_eq!(simulate_encoder_playback(&s, 0.0).unwrap(), s.rows());
    }

    #[test]
    fn step_response_reaches_63_percent_at_one_time_constant() {
        let tau = 0.2;
        let s = SetpointSchedule::new(vec![
            Setpoint { t: 0.0, counts: [0, 0] },
            Setpoint {
                t: tau,
                counts: [100, -100],
            },
            Setpoint {
                t: 6.0 * tau,
                counts: [100, -100],
            },
        ])
        .unwrap();
        let out = simulate_encoder_playback(&s, tau).unwrap();
        assert!((out[1].counts[0] - 63).abs() <= 1);
        assert!((out[1].counts[1] + 63).abs() <= 1);
        // Five more time constants: within e^-6 of the target.
        assert_eq!(out[2].counts, [100, -100]);
    }

    #[test]
    fn constant_schedule_settles_within_five_lags() {
        let tau = 0.1;
        let rows: Vec<Setpoint> = (0..=60)
            .map(|k| Setpoint {
                t: k as f64 * 0.01,
                counts: if k == 0 { [0, 0] } else { [500, 250] },
            })
            .collect();
        let out = simulate_encoder_playback(&SetpointSchedule::new(rows).unwrap(), tau).unwrap();
        let settled = out.iter().find(|r| r.t >= 5.0 * tau - 1e-12).unwrap();
        let bound = 500.0 * (-5.0_f64).exp() + 1.0;
        assert!((500 - settled.counts[0]) as f64 <= bound);
    }

    #[test]
    fn negative_lag_is_rejected() {
        let s = SetpointSchedule::new(vec![Setpoint { t: 0.0, counts: [0, 0] }]).unwrap();
        assert!(simulate_encoder_playback(&s, -1.0).is_err());
    }

    #[test]
    fn repeated_schedule_is_contiguous() {
        let s = SetpointSchedule::new(vec![
            Setpoint { t: 0.0, counts: [0, 0] },
            Setpoint {
                t: 5.0,
                counts: [10, 20],
            },
            Setpoint {
                t: 10.0,
                counts: [0, 0],
            },
        ])
        .unwrap();
        let r = s.repeated(3).unwrap();
        assert_eq!(r.len(), 7);
        assert_eq!(r.rows()[6].t, 30.0);
    }
}
