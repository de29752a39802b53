//! Closed-form kinematics of the symmetric five-bar linkage.
//!
//! Fixed joints sit at A = (0, 0) and E = (l0, 0) in the x–z plane. The
//! cranks AB and EF have length `l1`, the couplers BC and FC have length
//! `l2`, and C is the end-effector. The actuated angles `theta1` (at A) and
//! `theta2` (at E) are measured from +x, counter-clockwise.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::par::{self, Execution};
use crate::{Error, Result};

/// Elbow distances below this are treated as coincident elbows.
pub const COINCIDENT_ELBOWS_MM: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub z: f64,
}

impl Point {
    pub const fn new(x: f64, z: f64) -> Self {
        Self { x, z }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.z - other.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.z.is_finite()
    }
}

/// Link lengths of the symmetric five-bar, in millimeters.
///
/// Only three lengths are stored: the second crank and coupler are equal to
/// `l1` and `l2` by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct MechanismParams {
    l0: f64,
    l1: f64,
    l2: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    l0: f64,
    l1: f64,
    l2: f64,
}

impl TryFrom<RawParams> for MechanismParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        MechanismParams::new(r.l0, r.l1, r.l2)
    }
}

impl From<MechanismParams> for RawParams {
    fn from(p: MechanismParams) -> Self {
        RawParams {
            l0: p.l0,
            l1: p.l1,
            l2: p.l2,
        }
    }
}

impl MechanismParams {
    pub fn new(l0: f64, l1: f64, l2: f64) -> Result<Self> {
        for (name, v) in [("l0", l0), ("l1", l1), ("l2", l2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { l0, l1, l2 })
    }

    /// The built prototype: l1 = 101.09, l2 = 108.67, l0 = 101.20 mm.
    pub fn prototype() -> Self {
        Self {
            l0: 101.20,
            l1: 101.09,
            l2: 108.67,
        }
    }

    /// Distance between the fixed joints A and E.
    pub fn l0(&self) -> f64 {
        self.l0
    }

    /// Crank length (AB = EF).
    pub fn l1(&self) -> f64 {
        self.l1
    }

    /// Coupler length (BC = FC).
    pub fn l2(&self) -> f64 {
        self.l2
    }

    /// Positions of the passive elbows B and F.
    pub fn elbows(&self, joints: JointState) -> (Point, Point) {
        let (s1, c1) = joints.theta1.sin_cos();
        let (s2, c2) = joints.theta2.sin_cos();
        (
            Point::new(self.l1 * c1, self.l1 * s1),
            Point::new(self.l0 + self.l1 * c2, self.l1 * s2),
        )
    }

    /// Distance between elbows B and F.
    pub fn elbow_distance(&self, joints: JointState) -> f64 {
        let (b, f) = self.elbows(joints);
        b.distance(f)
    }

    fn check_elbow_distance(&self, h: f64) -> Result<()> {
        if h.is_finite() && h >= COINCIDENT_ELBOWS_MM && h <= 2.0 * self.l2 {
            Ok(())
        } else {
            Err(Error::InfeasibleConfiguration {
                elbow_distance: h,
                coupler: self.l2,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Sign {
    #[default]
    Positive,
    Negative,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Sign::Positive),
            -1 => Ok(Sign::Negative),
            _ => Err(format!("elbow sign must be +1 or -1, got {v}")),
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }
}

/// Branch signs of the passive elbows. Both positive is elbows-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElbowConfig {
    pub b: Sign,
    pub f: Sign,
}

impl ElbowConfig {
    pub const UP: ElbowConfig = ElbowConfig {
        b: Sign::Positive,
        f: Sign::Positive,
    };
}

/// How `theta2` combines the angle of ED with the crank offset at E.
///
/// `Difference` (ω − σ) is the branch consistent with the elbow-up forward
/// kinematics; `Sum` (ω + σ) is kept so the choice can be checked by
/// [`self_test`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theta2Rule {
    #[default]
    Difference,
    Sum,
}

/// Actuated angles in radians, optionally time-stamped in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointState {
    pub theta1: f64,
    pub theta2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

impl JointState {
    pub const fn new(theta1: f64, theta2: f64) -> Self {
        Self {
            theta1,
            theta2,
            t: None,
        }
    }

    pub fn from_degrees(theta1: f64, theta2: f64) -> Self {
        Self::new(theta1.to_radians(), theta2.to_radians())
    }

    pub fn at(self, t: f64) -> Self {
        Self { t: Some(t), ..self }
    }

    pub fn to_degrees(self) -> (f64, f64) {
        (self.theta1.to_degrees(), self.theta2.to_degrees())
    }
}

/// Ordered end-effector samples, optionally time-stamped.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarPath {
    points: Vec<Point>,
    timestamps: Option<Vec<f64>>,
}

impl PlanarPath {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        Self::build(points, None)
    }

    pub fn with_timestamps(points: Vec<Point>, timestamps: Vec<f64>) -> Result<Self> {
        Self::build(points, Some(timestamps))
    }

    fn build(points: Vec<Point>, timestamps: Option<Vec<f64>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooShortPath(points.len()));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidPath(format!("non-finite point at index {i}")));
        }
        if let Some(ts) = &timestamps {
            if ts.len() != points.len() {
                return Err(Error::InvalidPath(format!(
                    "{} timestamps for {} points",
                    ts.len(),
                    points.len()
                )));
            }
            if ts.iter().any(|t| !t.is_finite()) {
                return Err(Error::InvalidPath("non-finite timestamp".into()));
            }
            if let Some(i) = ts.windows(2).position(|w| w[1] <= w[0]) {
                return Err(Error::InvalidPath(format!(
                    "timestamps not strictly increasing at index {}",
                    i + 1
                )));
            }
        }
        Ok(Self { points, timestamps })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn timestamps(&self) -> Option<&[f64]> {
        self.timestamps.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Point {
        let n = self.points.len() as f64;
        let (sx, sz) = self.points.iter().fold((0.0, 0.0), |(sx, sz), p| (sx + p.x, sz + p.z));
        Point::new(sx / n, sz / n)
    }

    /// Axis-aligned bounding box as (min, max) corners.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.points {
            lo.x = lo.x.min(p.x);
            lo.z = lo.z.min(p.z);
            hi.x = hi.x.max(p.x);
            hi.z = hi.z.max(p.z);
        }
        (lo, hi)
    }

    pub fn translated(&self, dx: f64, dz: f64) -> Self {
        Self {
            points: self.points.iter().map(|p| Point::new(p.x + dx, p.z + dz)).collect(),
            timestamps: self.timestamps.clone(),
        }
    }
}

/// Reachability of a target, with the raw constraint values.
///
/// `r1` and `r2` are the signed cosines of the elbow angles at B and F; the
/// constraint values are their absolute values. `h` is the elbow distance of
/// the elbow-up solution, present only when both cosines are in (−1, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub r1: f64,
    pub r2: f64,
    pub h: Option<f64>,
    pub geometric_ok: bool,
    /// Literal `|H| < 1` and `|sqrt(l2²/H² − 1/4)| < 1` test. Never holds for
    /// millimeter-scale mechanisms and is not part of `geometric_ok`.
    pub literal_r3_r4_ok: bool,
}

/// End-effector position for the given actuated angles (elbow-up assembly).
pub fn forward_kinematics(params: &MechanismParams, joints: JointState) -> Result<Point> {
    let (l0, l1, l2) = (params.l0, params.l1, params.l2);
    let (s1, c1) = joints.theta1.sin_cos();
    let (s2, c2) = joints.theta2.sin_cos();

    let dx = l0 + l1 * (c2 - c1);
    let dz = l1 * (s2 - s1);
    let h = dx.hypot(dz);
    params.check_elbow_distance(h)?;

    // Offset from the BF midpoint along the left normal of B→F, per unit of H.
    let k = (l2 * l2 / (h * h) - 0.25).max(0.0).sqrt();
    Ok(Point::new(l1 * c1 + 0.5 * dx - dz * k, l1 * s1 + 0.5 * dz + dx * k))
}

/// Like [`forward_kinematics`], but poses whose elbows are more than 2·l2
/// apart place the end-effector at the BF midpoint, as if the couplers were
/// held collinear. The flag reports whether that happened. Coincident
/// elbows remain an error.
pub fn forward_kinematics_saturated(params: &MechanismParams, joints: JointState) -> Result<(Point, bool)> {
    match forward_kinematics(params, joints) {
        Ok(c) => Ok((c, false)),
        Err(Error::InfeasibleConfiguration { elbow_distance, .. })
            if elbow_distance.is_finite() && elbow_distance > 2.0 * params.l2 =>
        {
            let (b, f) = params.elbows(joints);
            Ok((Point::new(0.5 * (b.x + f.x), 0.5 * (b.z + f.z)), true))
        }
        Err(e) => Err(e),
    }
}

/// Signed law-of-cosines terms at elbows B and F for a target point.
pub fn elbow_cosines(params: &MechanismParams, target: Point) -> (f64, f64) {
    let (l0, l1, l2) = (params.l0, params.l1, params.l2);
    let ad2 = target.x * target.x + target.z * target.z;
    let ed2 = (l0 - target.x).powi(2) + target.z * target.z;
    let r1 = (l1 * l1 + l2 * l2 - ad2) / (2.0 * l1 * l2);
    let r2 = (l2 * l2 + l1 * l1 - ed2) / (2.0 * l2 * l1);
    (r1, r2)
}

/// Actuated angles placing the end-effector at `target`.
pub fn inverse_kinematics(params: &MechanismParams, target: Point, elbows: ElbowConfig) -> Result<JointState> {
    inverse_kinematics_with(params, target, elbows, Theta2Rule::Difference)
}

pub fn inverse_kinematics_with(
    params: &MechanismParams,
    target: Point,
    elbows: ElbowConfig,
    rule: Theta2Rule,
) -> Result<JointState> {
    let (l0, l1, l2) = (params.l0, params.l1, params.l2);
    let (r1, r2) = elbow_cosines(params, target);
    if !(r1.abs() < 1.0 && r2.abs() < 1.0) {
        return Err(Error::UnreachableTarget {
            x: target.x,
            z: target.z,
            r1,
            r2,
        });
    }

    let gamma = target.z.atan2(target.x);
    let omega = PI - target.z.atan2(l0 - target.x);

    let phi = (elbows.b.value() * (1.0 - r1 * r1).sqrt()).atan2(r1);
    let alpha = (elbows.f.value() * (1.0 - r2 * r2).sqrt()).atan2(r2);
    let beta = (l2 * (PI - phi).sin()).atan2(l1 + l2 * (PI - phi).cos());
    let sigma = (l2 * (PI - alpha).sin()).atan2(l1 + l2 * (PI - alpha).cos());

    let theta2 = match rule {
        Theta2Rule::Difference => omega - sigma,
        Theta2Rule::Sum => omega + sigma,
    };
    Ok(JointState::new(wrap_angle(gamma + beta), wrap_angle(theta2)))
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Reachability report for a target. Never fails.
pub fn feasibility(params: &MechanismParams, target: Point) -> FeasibilityReport {
    let (r1, r2) = elbow_cosines(params, target);
    let h = inverse_kinematics(params, target, ElbowConfig::UP)
        .ok()
        .map(|j| params.elbow_distance(j));
    let geometric_ok = r1.abs() < 1.0 && r2.abs() < 1.0 && h.is_some_and(|h| params.check_elbow_distance(h).is_ok());
    let literal_r3_r4_ok =
        h.is_some_and(|h| h.abs() < 1.0 && (params.l2 * params.l2 / (h * h) - 0.25).sqrt().abs() < 1.0);
    FeasibilityReport {
        r1,
        r2,
        h,
        geometric_ok,
        literal_r3_r4_ok,
    }
}

/// Probe poses tried by [`self_test`]: symmetric poses with the cranks
/// leaning outwards, from 90° to 170°.
fn probe_poses() -> impl Iterator<Item = JointState> {
    (0..=16).map(|k| {
        let t1 = (90.0 + 5.0 * k as f64).to_radians();
        JointState::new(t1, PI - t1)
    })
}

/// Checks that `rule` makes inverse kinematics undo forward kinematics on a
/// feasible probe pose. Returns the probe on success.
pub fn self_test(params: &MechanismParams, rule: Theta2Rule) -> Result<JointState> {
    let probe = probe_poses()
        .find(|&j| forward_kinematics(params, j).is_ok_and(|c| elbow_cosines(params, c).0.abs() < 1.0))
        .ok_or_else(|| Error::InvalidParams("no feasible probe pose for the kinematic self-test".into()))?;
    // Break the mirror symmetry so a wrong sign cannot pass by coincidence.
    let probe = JointState::new(probe.theta1, probe.theta2 - 0.05);
    let probe = if forward_kinematics(params, probe).is_ok() {
        probe
    } else {
        JointState::new(probe.theta1, probe.theta2 + 0.05)
    };
    let c = forward_kinematics(params, probe)?;
    let back = inverse_kinematics_with(params, c, ElbowConfig::UP, rule);
    let error = match back {
        Ok(j) => wrap_angle(j.theta1 - probe.theta1)
            .abs()
            .max(wrap_angle(j.theta2 - probe.theta2).abs()),
        Err(_) => f64::INFINITY,
    };
    if error < 1e-9 {
        Ok(probe)
    } else {
        Err(Error::SelfTestFailed {
            theta1: probe.theta1,
            theta2: probe.theta2,
            error,
        })
    }
}

/// Forward kinematics over a joint series, keeping order and timestamps.
///
/// Timestamps are carried over when every state has one.
pub fn trace_path(params: &MechanismParams, joints: &[JointState]) -> Result<PlanarPath> {
    trace_path_with(params, joints, Execution::default())
}

pub fn trace_path_with(params: &MechanismParams, joints: &[JointState], exec: Execution) -> Result<PlanarPath> {
    let points = par::try_map(exec, joints, |i, &j| {
        forward_kinematics(params, j).map_err(|e| Error::at(i, e))
    })?;
    let timestamps: Option<Vec<f64>> = joints.iter().map(|j| j.t).collect();
    match timestamps {
        Some(ts) => PlanarPath::with_timestamps(points, ts),
        None => PlanarPath::new(points),
    }
}

/// Similarity transform about `anchor`: p ↦ anchor + factor·(p − anchor).
pub fn scale_amplitude(path: &PlanarPath, factor: f64, anchor: Point) -> Result<PlanarPath> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::NonPositiveFactor(factor));
    }
    let points = path
        .points
        .iter()
        // factor·p + (1 − factor)·anchor with a single rounding.
        .map(|p| {
            Point::new(
                factor.mul_add(p.x, (1.0 - factor) * anchor.x),
                factor.mul_add(p.z, (1.0 - factor) * anchor.z),
            )
        })
        .collect();
    Ok(PlanarPath {
        points,
        timestamps: path.timestamps.clone(),
    })
}
