//! Joint-space trajectories for one flexion–extension cycle.
//!
//! Each motor follows four quintic segments: start → via 1 → extended
//! position (first half-cycle), then extended → via 2 → start (second
//! half-cycle). Each half-cycle is one 12×12 linear system in the twelve
//! coefficients of its two segments. Polynomials are written in absolute
//! cycle time, not per-segment local time.

use serde::{Deserialize, Serialize};

use crate::{linalg, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTiming", into = "RawTiming")]
pub struct CycleTiming {
    t_v1: f64,
    t_f1: f64,
    t_v2: f64,
    t_f2: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTiming {
    t_v1: f64,
    t_f1: f64,
    t_v2: f64,
    t_f2: f64,
}

impl TryFrom<RawTiming> for CycleTiming {
    type Error = Error;
    fn try_from(r: RawTiming) -> Result<Self> {
        CycleTiming::new(r.t_v1, r.t_f1, r.t_v2, r.t_f2)
    }
}

impl From<CycleTiming> for RawTiming {
    fn from(t: CycleTiming) -> Self {
        RawTiming {
            t_v1: t.t_v1,
            t_f1: t.t_f1,
            t_v2: t.t_v2,
            t_f2: t.t_f2,
        }
    }
}

impl CycleTiming {
    pub fn new(t_v1: f64, t_f1: f64, t_v2: f64, t_f2: f64) -> Result<Self> {
        let ts = [0.0, t_v1, t_f1, t_v2, t_f2];
        if ts.iter().any(|t| !t.is_finite()) || ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidTiming(format!(
                "need 0 < t_v1 < t_f1 < t_v2 < t_f2, got ({t_v1}, {t_f1}, {t_v2}, {t_f2})"
            )));
        }
        Ok(Self { t_v1, t_f1, t_v2, t_f2 })
    }

    /// Ten-second cycle with vias at 2.5 s and 7.5 s.
    pub fn prototype() -> Self {
        Self {
            t_v1: 2.5,
            t_f1: 5.0,
            t_v2: 7.5,
            t_f2: 10.0,
        }
    }

    pub fn t_v1(&self) -> f64 {
        self.t_v1
    }
    pub fn t_f1(&self) -> f64 {
        self.t_f1
    }
    pub fn t_v2(&self) -> f64 {
        self.t_v2
    }
    pub fn t_f2(&self) -> f64 {
        self.t_f2
    }

    /// The five control times 0, t_v1, t_f1, t_v2, t_f2.
    pub fn control_times(&self) -> [f64; 5] {
        [0.0, self.t_v1, self.t_f1, self.t_v2, self.t_f2]
    }
}

/// Link angles (radians) at the five control times of a cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleWaypoints {
    pub start: f64,
    pub via1: f64,
    pub extended: f64,
    pub via2: f64,
    pub end: f64,
}

impl CycleWaypoints {
    pub fn new(start: f64, via1: f64, extended: f64, via2: f64, end: f64) -> Result<Self> {
        let all = [start, via1, extended, via2, end];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidWaypoints("non-finite angle".into()));
        }
        if (end - start).abs() > 1e-12 {
            return Err(Error::InvalidWaypoints(format!(
                "a cycle must return to its start: start {start} rad, end {end} rad"
            )));
        }
        Ok(Self {
            start,
            via1,
            extended,
            via2,
            end,
        })
    }

    pub fn from_degrees(start: f64, via1: f64, extended: f64, via2: f64, end: f64) -> Result<Self> {
        Self::new(
            start.to_radians(),
            via1.to_radians(),
            extended.to_radians(),
            via2.to_radians(),
            end.to_radians(),
        )
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.start, self.via1, self.extended, self.via2, self.end]
    }
}

/// Jerk imposed at the cycle start, at the extended position, and at the end.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryJerk {
    pub start: f64,
    pub turnaround: f64,
    pub end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivative {
    Position,
    Velocity,
    Acceleration,
    Jerk,
}

impl Derivative {
    pub const ALL: [Derivative; 4] = [
        Derivative::Position,
        Derivative::Velocity,
        Derivative::Acceleration,
        Derivative::Jerk,
    ];

    pub fn order(self) -> usize {
        self as usize
    }
}

/// Row of derivative `order` of the monomial basis 1, t, …, t⁵.
fn basis_row(t: f64, order: usize) -> [f64; 6] {
    let mut row = [0.0; 6];
    for (k, v) in row.iter_mut().enumerate().skip(order) {
        let falling: f64 = (0..order).map(|m| (k - m) as f64).product();
        *v = falling * t.powi((k - order) as i32);
    }
    row
}

/// One quintic piece. `coeffs` are in absolute time, as solved; evaluation
/// uses the equivalent expansion about `t_lo`, which avoids cancellation
/// between large powers of t late in the cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuinticSegment {
    coeffs: [f64; 6],
    #[serde(skip)]
    local: [f64; 6],
    t_lo: f64,
    t_hi: f64,
}

impl QuinticSegment {
    pub fn new(coeffs: [f64; 6], t_lo: f64, t_hi: f64) -> Self {
        // local[k] = Σ_{j≥k} C(j, k) · coeffs[j] · t_lo^(j−k)
        let mut local = [0.0; 6];
        for (k, l) in local.iter_mut().enumerate() {
            let mut binom = 1.0;
            let mut power = 1.0;
            for (j, c) in coeffs.iter().enumerate().skip(k) {
                *l += binom * c * power;
                binom = binom * (j + 1) as f64 / (j + 1 - k) as f64;
                power *= t_lo;
            }
        }
        Self {
            coeffs,
            local,
            t_lo,
            t_hi,
        }
    }

    pub fn coeffs(&self) -> &[f64; 6] {
        &self.coeffs
    }

    pub fn t_lo(&self) -> f64 {
        self.t_lo
    }

    pub fn t_hi(&self) -> f64 {
        self.t_hi
    }

    pub fn eval(&self, t: f64, d: Derivative) -> f64 {
        let c = &self.local;
        let t = t - self.t_lo;
        match d {
            Derivative::Position => c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5])))),
            Derivative::Velocity => c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5]))),
            Derivative::Acceleration => 2.0 * c[2] + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5])),
            Derivative::Jerk => 6.0 * c[3] + t * (24.0 * c[4] + t * 60.0 * c[5]),
        }
    }
}

/// Start, via and end times of one half-cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfCycleTimes {
    pub start: f64,
    pub via: f64,
    pub end: f64,
}

/// Condition matrix of a half-cycle. Row layout matches the condition
/// vector: start position/velocity/acceleration/jerk, via position for each
/// segment, via velocity and acceleration continuity, end
/// position/velocity/acceleration/jerk.
pub fn half_cycle_matrix(times: HalfCycleTimes) -> [[f64; 12]; 12] {
    let mut m = [[0.0; 12]; 12];
    for d in 0..4 {
        m[d][..6].copy_from_slice(&basis_row(times.start, d));
        m[8 + d][6..].copy_from_slice(&basis_row(times.end, d));
    }
    m[4][..6].copy_from_slice(&basis_row(times.via, 0));
    m[5][6..].copy_from_slice(&basis_row(times.via, 0));
    for (row, d) in [(6, 1), (7, 2)] {
        let r = basis_row(times.via, d);
        m[row][..6].copy_from_slice(&r);
        for (dst, v) in m[row][6..].iter_mut().zip(r) {
            *dst = -v;
        }
    }
    m
}

/// Coefficients of the two quintics of one half-cycle, first segment first.
pub fn solve_half_cycle(times: HalfCycleTimes, conditions: &[f64; 12]) -> Result<[f64; 12]> {
    if conditions.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidWaypoints("non-finite boundary condition".into()));
    }
    linalg::solve(&half_cycle_matrix(times), conditions)
}

/// Relative residual of a half-cycle solve, for verification.
pub fn half_cycle_residual(times: HalfCycleTimes, coeffs: &[f64; 12], conditions: &[f64; 12]) -> f64 {
    linalg::relative_residual(&half_cycle_matrix(times), coeffs, conditions)
}

/// Four-segment quintic trajectory of one motor over one cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseQuintic {
    segments: [QuinticSegment; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSample {
    pub t: f64,
    pub position: f64,
    pub velocity: f64,
    pub acceleration: f64,
}

/// Plans one cycle through the five waypoints with zero boundary velocity and
/// acceleration.
pub fn plan_cycle(waypoints: &CycleWaypoints, timing: &CycleTiming, jerk: BoundaryJerk) -> Result<PiecewiseQuintic> {
    let w = waypoints;
    let first = HalfCycleTimes {
        start: 0.0,
        via: timing.t_v1,
        end: timing.t_f1,
    };
    let q1 = [
        w.start,
        0.0,
        0.0,
        jerk.start,
        w.via1,
        w.via1,
        0.0,
        0.0,
        w.extended,
        0.0,
        0.0,
        jerk.turnaround,
    ];
    // The second half starts from the first half's end conditions.
    let second = HalfCycleTimes {
        start: timing.t_f1,
        via: timing.t_v2,
        end: timing.t_f2,
    };
    let q2 = [
        q1[8], q1[9], q1[10], q1[11], w.via2, w.via2, 0.0, 0.0, w.end, 0.0, 0.0, jerk.end,
    ];
    let c1 = solve_half_cycle(first, &q1)?;
    let c2 = solve_half_cycle(second, &q2)?;

    let seg = |c: &[f64], t_lo, t_hi| QuinticSegment::new(c.try_into().expect("six coefficients"), t_lo, t_hi);
    Ok(PiecewiseQuintic {
        segments: [
            seg(&c1[..6], 0.0, timing.t_v1),
            seg(&c1[6..], timing.t_v1, timing.t_f1),
            seg(&c2[..6], timing.t_f1, timing.t_v2),
            seg(&c2[6..], timing.t_v2, timing.t_f2),
        ],
    })
}

impl PiecewiseQuintic {
    pub fn segments(&self) -> &[QuinticSegment; 4] {
        &self.segments
    }

    pub fn duration(&self) -> f64 {
        self.segments[3].t_hi()
    }

    /// Index of the segment owning `t`. Interior breakpoints belong to the
    /// segment on their right; the final time belongs to the last segment.
    fn segment_index(&self, t: f64) -> usize {
        self.segments[1..].iter().take_while(|s| t >= s.t_lo()).count()
    }

    pub fn evaluate(&self, t: f64, d: Derivative) -> Result<f64> {
        if !(0.0..=self.duration()).contains(&t) {
            return Err(Error::OutOfDomain {
                t,
                end: self.duration(),
            });
        }
        Ok(self.segments[self.segment_index(t)].eval(t, d))
    }

    /// Uniform grid over the whole cycle, both endpoints included.
    pub fn sample(&self, rate: f64) -> Result<Vec<ProfileSample>> {
        sample_times(self.duration(), rate)?
            .into_iter()
            .map(|t| {
                let s = &self.segments[self.segment_index(t)];
                Ok(ProfileSample {
                    t,
                    position: s.eval(t, Derivative::Position),
                    velocity: s.eval(t, Derivative::Velocity),
                    acceleration: s.eval(t, Derivative::Acceleration),
                })
            })
            .collect()
    }
}

/// Grid 0 = t_0 < … < t_n = duration with spacing at most 1/rate.
pub fn sample_times(duration: f64, rate: f64) -> Result<Vec<f64>> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::NonPositiveRate(rate));
    }
    let n = ((duration * rate - 1e-9).ceil() as usize).max(1);
    Ok((0..=n)
        .map(|k| {
            if k == n {
                duration
            } else {
                duration * k as f64 / n as f64
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2() -> CycleWaypoints {
        CycleWaypoints::from_degrees(153.55, 104.39, 92.37, 104.39, 153.55).unwrap()
    }

    #[test]
    fn timing_validation() {
        assert!(CycleTiming::new(2.5, 5.0, 7.5, 10.0).is_ok());
        assert!(CycleTiming::new(0.0, 5.0, 7.5, 10.0).is_err());
        assert!(CycleTiming::new(2.5, 2.5, 7.5, 10.0).is_err());
        assert!(CycleTiming::new(2.5, 5.0, 7.5, f64::NAN).is_err());
    }

    #[test]
    fn waypoints_must_close() {
        assert!(CycleWaypoints::new(1.0, 0.5, 0.2, 0.5, 1.1).is_err());
    }

    #[test]
    fn constant_conditions_give_constant_segments() {
        let times = HalfCycleTimes {
            start: 0.0,
            via: 2.5,
            end: 5.0,
        };
        let th = 0.7;
        let q = [th, 0.0, 0.0, 0.0, th, th, 0.0, 0.0, th, 0.0, 0.0, 0.0];
        let c = solve_half_cycle(times, &q).unwrap();
        for seg in [&c[..6], &c[6..]] {
            assert!((seg[0] - th).abs() < 1e-12);
            assert!(seg[1..].iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn first_half_of_m2_hits_its_waypoints() {
        let times = HalfCycleTimes {
            start: 0.0,
            via: 2.5,
            end: 5.0,
        };
        let (a, v, b) = (153.55_f64.to_radians(), 104.39_f64.to_radians(), 92.37_f64.to_radians());
        let q = [a, 0.0, 0.0, 0.0, v, v, 0.0, 0.0, b, 0.0, 0.0, 0.0];
        let c = solve_half_cycle(times, &q).unwrap();
        assert!(half_cycle_residual(times, &c, &q) < 1e-9);
        let s1 = QuinticSegment::new(c[..6].try_into().unwrap(), 0.0, 2.5);
        let s2 = QuinticSegment::new(c[6..].try_into().unwrap(), 2.5, 5.0);
        for (got, want) in [
            (s1.eval(0.0, Derivative::Position), 153.55),
            (s1.eval(2.5, Derivative::Position), 104.39),
            (s2.eval(2.5, Derivative::Position), 104.39),
            (s2.eval(5.0, Derivative::Position), 92.37),
        ] {
            assert!((got.to_degrees() - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn local_expansion_matches_absolute_polynomial() {
        let c = [0.3, -1.2, 0.7, 0.05, -0.011, 0.0007];
        let s = QuinticSegment::new(c, 7.5, 10.0);
        for t in [7.5_f64, 8.25, 9.9] {
            let abs: f64 = c.iter().enumerate().map(|(k, v)| v * t.powi(k as i32)).sum();
            assert!((s.eval(t, Derivative::Position) - abs).abs() < 1e-10);
            let vel: f64 = c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, v)| k as f64 * v * t.powi(k as i32 - 1))
                .sum();
            assert!((s.eval(t, Derivative::Velocity) - vel).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_length_segment_is_singular() {
        let times = HalfCycleTimes {
            start: 0.0,
            via: 0.0,
            end: 5.0,
        };
        let q = [0.0; 12];
        assert!(matches!(solve_half_cycle(times, &q), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn boundary_values() {
        let p = plan_cycle(&m2(), &CycleTiming::prototype(), BoundaryJerk::default()).unwrap();
        assert!((p.evaluate(0.0, Derivative::Position).unwrap() - m2().start).abs() < 1e-12);
        for t in [0.0, 10.0] {
            assert!(p.evaluate(t, Derivative::Velocity).unwrap().abs() < 1e-9);
            assert!(p.evaluate(t, Derivative::Acceleration).unwrap().abs() < 1e-9);
        }
        assert!(p.evaluate(-1e-9, Derivative::Position).is_err());
        assert!(matches!(
            p.evaluate(10.0 + 1e-9, Derivative::Position),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn breakpoint_ownership() {
        let p = plan_cycle(&m2(), &CycleTiming::prototype(), BoundaryJerk::default()).unwrap();
        assert_eq!(p.segment_index(0.0), 0);
        assert_eq!(p.segment_index(2.5), 1);
        assert_eq!(p.segment_index(5.0), 2);
        assert_eq!(p.segment_index(7.5), 3);
        assert_eq!(p.segment_index(10.0), 3);
    }

    #[test]
    fn nonzero_boundary_jerk_is_honoured() {
        let jerk = BoundaryJerk {
            start: 0.1,
            turnaround: -0.2,
            end: 0.05,
        };
        let p = plan_cycle(&m2(), &CycleTiming::prototype(), jerk).unwrap();
        assert!((p.evaluate(0.0, Derivative::Jerk).unwrap() - 0.1).abs() < 1e-9);
        assert!((p.evaluate(5.0, Derivative::Jerk).unwrap() + 0.2).abs() < 1e-9);
        assert!((p.segments()[1].eval(5.0, Derivative::Jerk) + 0.2).abs() < 1e-9);
        assert!((p.evaluate(10.0, Derivative::Jerk).unwrap() - 0.05).abs() < 1e-9);
    }

    #[test]
    fn sample_grid() {
        let p = plan_cycle(&m2(), &CycleTiming::prototype(), BoundaryJerk::default()).unwrap();
        let s = p.sample(0.1).unwrap();
        assert_eq!(s.iter().map(|s| s.t).collect::<Vec<_>>(), vec![0.0, 10.0]);
        let s = p.sample(0.4).unwrap();
        let want = [153.55, 104.39, 92.37, 104.39, 153.55];
        assert_eq!(s.len(), 5);
        for (s, w) in s.iter().zip(want) {
            assert!((s.position.to_degrees() - w).abs() < 1e-9);
        }
        assert!(matches!(p.sample(0.0), Err(Error::NonPositiveRate(_))));
        assert!(p.sample(-3.0).is_err());
    }

    #[test]
    fn doubling_rate_refines_grid() {
        let p = plan_cycle(&m2(), &CycleTiming::prototype(), BoundaryJerk::default()).unwrap();
        let a = p.sample(10.0).unwrap();
        let b = p.sample(20.0).unwrap();
        assert_eq!(b.len() - 1, 2 * (a.len() - 1));
        for (i, s) in a.iter().enumerate() {
            assert_eq!(s.t, b[2 * i].t);
            assert_eq!(s.position, b[2 * i].position);
        }
    }
}
