//! Dimensional synthesis: choose link lengths and input-angle endpoints so the
//! end-effector tracks a desired path.
//!
//! The objective is the mean Euclidean distance between the desired samples
//! and the end-effector positions reached by sweeping both input angles
//! linearly from their start to their end values, one sample per desired
//! point. The search is a projected gradient method on the box of design
//! bounds: central-difference gradients, Barzilai–Borwein trial steps and an
//! Armijo backtracking line search. Reachability constraints enter through a
//! quadratic penalty.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::mechanism::{self, elbow_cosines, ElbowConfig, JointState, MechanismParams, PlanarPath, Point};
use crate::par::{self, Execution};
use crate::{Error, Result};

/// Added to the objective for every sample the design cannot reach.
pub const INFEASIBLE_SAMPLE_PENALTY_MM: f64 = 1e3;

const N_DESIGN: usize = 7;

const COMPONENT_NAMES: [&str; N_DESIGN] = [
    "l1",
    "l2",
    "l0",
    "theta1_start",
    "theta1_end",
    "theta2_start",
    "theta2_end",
];

/// Link lengths (mm) and input-angle endpoints (rad).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignVector {
    pub l1: f64,
    pub l2: f64,
    pub l0: f64,
    pub theta1_start: f64,
    pub theta1_end: f64,
    pub theta2_start: f64,
    pub theta2_end: f64,
}

impl DesignVector {
    /// The built prototype's design vector.
    pub fn prototype() -> Self {
        Self {
            l1: 101.09,
            l2: 108.67,
            l0: 101.20,
            theta1_start: 153.55_f64.to_radians(),
            theta1_end: 92.37_f64.to_radians(),
            theta2_start: 83.07_f64.to_radians(),
            theta2_end: 40.44_f64.to_radians(),
        }
    }

    pub fn to_array(&self) -> [f64; N_DESIGN] {
        [
            self.l1,
            self.l2,
            self.l0,
            self.theta1_start,
            self.theta1_end,
            self.theta2_start,
            self.theta2_end,
        ]
    }

    pub fn from_array(a: [f64; N_DESIGN]) -> Self {
        Self {
            l1: a[0],
            l2: a[1],
            l0: a[2],
            theta1_start: a[3],
            theta1_end: a[4],
            theta2_start: a[5],
            theta2_end: a[6],
        }
    }

    pub fn params(&self) -> Result<MechanismParams> {
        MechanismParams::new(self.l0, self.l1, self.l2).map_err(|e| Error::InvalidDesign(e.to_string()))
    }

    pub fn start(&self) -> JointState {
        JointState::new(self.theta1_start, self.theta2_start)
    }

    pub fn end(&self) -> JointState {
        JointState::new(self.theta1_end, self.theta2_end)
    }

    /// Input angles interpolated linearly from start to end over `n` samples.
    pub fn joint_schedule(&self, n: usize) -> Vec<JointState> {
        (0..n)
            .map(|i| {
                let u = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
                JointState::new(
                    self.theta1_start + (self.theta1_end - self.theta1_start) * u,
                    self.theta2_start + (self.theta2_end - self.theta2_start) * u,
                )
            })
            .collect()
    }

    /// Traces the design's own sweep with `n` samples.
    pub fn trace(&self, n: usize) -> Result<PlanarPath> {
        mechanism::trace_path(&self.params()?, &self.joint_schedule(n))
    }

    fn check_finite(&self) -> Result<()> {
        match self.to_array().iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::InvalidDesign(format!("{} is not finite", COMPONENT_NAMES[i]))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds {
    lower: DesignVector,
    upper: DesignVector,
}

impl Default for Bounds {
    /// Lengths in [20, 200] mm, angles in [0°, 180°].
    fn default() -> Self {
        Self {
            lower: DesignVector::from_array([20.0, 20.0, 20.0, 0.0, 0.0, 0.0, 0.0]),
            upper: DesignVector::from_array([200.0, 200.0, 200.0, PI, PI, PI, PI]),
        }
    }
}

impl Bounds {
    pub fn new(lower: DesignVector, upper: DesignVector) -> Result<Self> {
        let (lo, hi) = (lower.to_array(), upper.to_array());
        for i in 0..N_DESIGN {
            if !(lo[i].is_finite() && hi[i].is_finite()) {
                return Err(Error::InvalidBounds(format!(
                    "{} bound is not finite",
                    COMPONENT_NAMES[i]
                )));
            }
            if lo[i] > hi[i] {
                return Err(Error::InvalidBounds(format!(
                    "{}: lower {} exceeds upper {}",
                    COMPONENT_NAMES[i], lo[i], hi[i]
                )));
            }
        }
        if lo[..3].iter().any(|&l| l <= 0.0) {
            return Err(Error::InvalidBounds("length bounds must be positive".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> &DesignVector {
        &self.lower
    }

    pub fn upper(&self) -> &DesignVector {
        &self.upper
    }

    pub fn check(&self, d: &DesignVector) -> Result<()> {
        let (lo, hi, x) = (self.lower.to_array(), self.upper.to_array(), d.to_array());
        for i in 0..N_DESIGN {
            if !(lo[i] <= x[i] && x[i] <= hi[i]) {
                return Err(Error::InitOutOfBounds {
                    component: COMPONENT_NAMES[i],
                    value: x[i],
                    lower: lo[i],
                    upper: hi[i],
                });
            }
        }
        Ok(())
    }

    pub fn clamp(&self, d: &DesignVector) -> DesignVector {
        let (lo, hi, mut x) = (self.lower.to_array(), self.upper.to_array(), d.to_array());
        for i in 0..N_DESIGN {
            x[i] = x[i].clamp(lo[i], hi[i]);
        }
        DesignVector::from_array(x)
    }

    /// Uniform random design inside the box.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> DesignVector {
        let (lo, hi) = (self.lower.to_array(), self.upper.to_array());
        let mut x = [0.0; N_DESIGN];
        for i in 0..N_DESIGN {
            x[i] = lo[i] + (hi[i] - lo[i]) * rng.random::<f64>();
        }
        DesignVector::from_array(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SynthesisOptions {
    pub max_iterations: usize,
    pub max_evaluations: usize,
    /// Stop when an accepted step improves the objective by less than this (mm).
    pub tolerance: f64,
    /// Central-difference step in bound-normalized coordinates.
    pub gradient_step: f64,
    pub armijo: f64,
    pub shrink: f64,
    /// Smallest line-search step fraction before giving up.
    pub min_step: f64,
    /// Quadratic penalty weight (mm) per violated constraint.
    pub penalty_weight: f64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            max_iterations: 150,
            max_evaluations: 2000,
            tolerance: 1e-6,
            gradient_step: 1e-7,
            armijo: 1e-4,
            shrink: 0.5,
            min_step: 1e-12,
            penalty_weight: 1e4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterations,
    MaxEvaluations,
    Tolerance,
    StepUnderflow,
    Stationary,
}

impl StopReason {
    pub fn is_converged(self) -> bool {
        matches!(
            self,
            StopReason::Tolerance | StopReason::StepUnderflow | StopReason::Stationary
        )
    }
}

/// Worst constraint values over the desired samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub worst_r1: f64,
    pub worst_r2: f64,
    pub infeasible_samples: usize,
    pub geometric_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub best: DesignVector,
    /// Tracking error of `best` in mm.
    pub error_mm: f64,
    /// Penalized objective of every accepted iterate, starting with the init.
    pub history: Vec<(usize, f64)>,
    pub evaluations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub constraint_report: ConstraintReport,
}

/// Mean distance between the design's swept end-effector positions and the
/// desired samples. Unreachable sweep samples add
/// [`INFEASIBLE_SAMPLE_PENALTY_MM`] each instead of failing.
pub fn objective_error(design: &DesignVector, desired: &[Point]) -> Result<f64> {
    design.check_finite()?;
    if desired.is_empty() {
        return Err(Error::InvalidPath("desired path is empty".into()));
    }
    Ok(error_terms(&design.params()?, design, desired).0)
}

/// (objective, sum of squared sweep elbow-distance violations)
fn error_terms(params: &MechanismParams, design: &DesignVector, desired: &[Point]) -> (f64, f64) {
    let n = desired.len();
    let mut sum = 0.0;
    let mut infeasible = 0usize;
    let mut stretch = 0.0;
    for (j, d) in design.joint_schedule(n).into_iter().zip(desired) {
        match mechanism::forward_kinematics(params, j) {
            Ok(c) => sum += c.distance(*d),
            Err(_) => {
                infeasible += 1;
                let h = params.elbow_distance(j);
                stretch += (h / (2.0 * params.l2()) - 1.0).max(0.0).powi(2);
            }
        }
    }
    (
        sum / n as f64 + INFEASIBLE_SAMPLE_PENALTY_MM * infeasible as f64,
        stretch,
    )
}

fn merit(design: &DesignVector, desired: &[Point], weight: f64) -> f64 {
    let params = match design.params() {
        Ok(p) => p,
        Err(_) => return f64::INFINITY,
    };
    let (e, stretch) = error_terms(&params, design, desired);
    let mut violation = stretch;
    for d in desired {
        let (r1, r2) = elbow_cosines(&params, *d);
        violation += (r1.abs() - 1.0).max(0.0).powi(2) + (r2.abs() - 1.0).max(0.0).powi(2);
    }
    e + weight * violation
}

pub fn constraint_report(design: &DesignVector, desired: &[Point]) -> Result<ConstraintReport> {
    let params = design.params()?;
    let mut report = ConstraintReport {
        worst_r1: 0.0,
        worst_r2: 0.0,
        infeasible_samples: 0,
        geometric_ok: true,
    };
    for d in desired {
        let f = mechanism::feasibility(&params, *d);
        report.worst_r1 = report.worst_r1.max(f.r1.abs());
        report.worst_r2 = report.worst_r2.max(f.r2.abs());
        if !f.geometric_ok {
            report.infeasible_samples += 1;
            report.geometric_ok = false;
        }
    }
    Ok(report)
}

/// Maps designs to the unit box and back. Components with a degenerate
/// (zero-width) range are held fixed.
struct BoxScaling {
    lower: [f64; N_DESIGN],
    width: [f64; N_DESIGN],
}

impl BoxScaling {
    fn new(bounds: &Bounds) -> Self {
        let lower = bounds.lower.to_array();
        let upper = bounds.upper.to_array();
        let mut width = [0.0; N_DESIGN];
        for i in 0..N_DESIGN {
            width[i] = upper[i] - lower[i];
        }
        Self { lower, width }
    }

    fn to_unit(&self, d: &DesignVector) -> [f64; N_DESIGN] {
        let x = d.to_array();
        let mut u = [0.0; N_DESIGN];
        for i in 0..N_DESIGN {
            if self.width[i] > 0.0 {
                u[i] = ((x[i] - self.lower[i]) / self.width[i]).clamp(0.0, 1.0);
            }
        }
        u
    }

    fn to_design(&self, u: &[f64; N_DESIGN]) -> DesignVector {
        let mut x = [0.0; N_DESIGN];
        for i in 0..N_DESIGN {
            x[i] = self.lower[i] + self.width[i] * u[i];
        }
        DesignVector::from_array(x)
    }

    fn free(&self, i: usize) -> bool {
        self.width[i] > 0.0
    }
}

fn dot(a: &[f64; N_DESIGN], b: &[f64; N_DESIGN]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Counter<'a> {
    desired: &'a [Point],
    scaling: &'a BoxScaling,
    weight: f64,
    evaluations: usize,
}

impl Counter<'_> {
    fn eval(&mut self, u: &[f64; N_DESIGN]) -> f64 {
        self.evaluations += 1;
        merit(&self.scaling.to_design(u), self.desired, self.weight)
    }
}

/// Bounded local search for the design that best tracks `desired`.
pub fn synthesize(
    desired: &PlanarPath,
    bounds: &Bounds,
    init: &DesignVector,
    opts: &SynthesisOptions,
) -> Result<OptimizationResult> {
    init.check_finite()?;
    bounds.check(init)?;
    let points = desired.points();
    let scaling = BoxScaling::new(bounds);
    let n_free = (0..N_DESIGN).filter(|&i| scaling.free(i)).count();
    let mut counter = Counter {
        desired: points,
        scaling: &scaling,
        weight: opts.penalty_weight,
        evaluations: 0,
    };

    // The init is taken as given; only trial points are rebuilt from the box.
    let mut u = scaling.to_unit(init);
    let mut best = *init;
    let mut history = Vec::new();

    let stop_reason = 'search: {
        if opts.max_evaluations == 0 {
            break 'search StopReason::MaxEvaluations;
        }
        counter.evaluations += 1;
        let mut f = merit(init, points, opts.penalty_weight);
        history.push((0, f));

        let mut prev: Option<([f64; N_DESIGN], [f64; N_DESIGN])> = None;
        for iteration in 1..=opts.max_iterations {
            if counter.evaluations + 2 * n_free > opts.max_evaluations {
                break 'search StopReason::MaxEvaluations;
            }
            let mut g = [0.0; N_DESIGN];
            for i in (0..N_DESIGN).filter(|&i| scaling.free(i)) {
                let (mut up, mut down) = (u, u);
                up[i] = (u[i] + opts.gradient_step).min(1.0);
                down[i] = (u[i] - opts.gradient_step).max(0.0);
                g[i] = (counter.eval(&up) - counter.eval(&down)) / (up[i] - down[i]);
            }
            if g.iter().any(|v| !v.is_finite()) {
                break 'search StopReason::Stationary;
            }

            let gmax = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let lambda = match prev {
                Some((u_prev, g_prev)) => {
                    let mut s = [0.0; N_DESIGN];
                    let mut y = [0.0; N_DESIGN];
                    for i in 0..N_DESIGN {
                        s[i] = u[i] - u_prev[i];
                        y[i] = g[i] - g_prev[i];
                    }
                    let sy = dot(&s, &y);
                    if sy > 0.0 {
                        dot(&s, &s) / sy
                    } else {
                        1.0
                    }
                }
                None => 1e-3 / gmax.max(1e-12),
            }
            .clamp(1e-10, 1e10);

            let mut dir = [0.0; N_DESIGN];
            for i in 0..N_DESIGN {
                if scaling.free(i) {
                    dir[i] = (u[i] - lambda * g[i]).clamp(0.0, 1.0) - u[i];
                }
            }
            let slope = dot(&g, &dir);
            if !(slope < 0.0) || dir.iter().all(|d| d.abs() < 1e-15) {
                break 'search StopReason::Stationary;
            }

            let mut step = 1.0;
            let (u_next, f_next) = loop {
                if counter.evaluations >= opts.max_evaluations {
                    break 'search StopReason::MaxEvaluations;
                }
                let mut trial = u;
                for i in 0..N_DESIGN {
                    trial[i] = (u[i] + step * dir[i]).clamp(0.0, 1.0);
                }
                let ft = counter.eval(&trial);
                if ft <= f + opts.armijo * step * slope {
                    break (trial, ft);
                }
                step *= opts.shrink;
                if step < opts.min_step {
                    break 'search StopReason::StepUnderflow;
                }
            };

            prev = Some((u, g));
            let improvement = f - f_next;
            u = u_next;
            f = f_next;
            best = scaling.to_design(&u);
            history.push((iteration, f));
            if improvement < opts.tolerance {
                break 'search StopReason::Tolerance;
            }
        }
        StopReason::MaxIterations
    };

    Ok(OptimizationResult {
        best,
        error_mm: objective_error(&best, points)?,
        history,
        evaluations: counter.evaluations,
        converged: stop_reason.is_converged(),
        stop_reason,
        constraint_report: constraint_report(&best, points)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiStartResult {
    pub best_index: usize,
    pub runs: Vec<OptimizationResult>,
}

impl MultiStartResult {
    pub fn best(&self) -> &OptimizationResult {
        &self.runs[self.best_index]
    }
}

/// Runs [`synthesize`] from several starting designs.
///
/// Start 0 is `init` when given; the others are drawn uniformly from the
/// bounds with a generator seeded by `seed` and the start index, so results do
/// not depend on scheduling. The best run has the lowest final objective,
/// ties going to the lower index.
pub fn synthesize_multistart(
    desired: &PlanarPath,
    bounds: &Bounds,
    init: Option<&DesignVector>,
    opts: &SynthesisOptions,
    starts: usize,
    seed: u64,
    exec: Execution,
) -> Result<MultiStartResult> {
    if starts == 0 {
        return Err(Error::InvalidDesign("multi-start needs at least one start".into()));
    }
    let inits: Vec<DesignVector> = (0..starts)
        .map(|k| match (k, init) {
            (0, Some(d)) => *d,
            _ => bounds.sample(&mut ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64))),
        })
        .collect();
    let runs = par::try_map(exec, &inits, |_, d| synthesize(desired, bounds, d, opts))?;
    let best_index = runs
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| final_merit(a).total_cmp(&final_merit(b)))
        .map(|(i, _)| i)
        .expect("at least one run");
    Ok(MultiStartResult { best_index, runs })
}

fn final_merit(r: &OptimizationResult) -> f64 {
    r.history.last().map_or(f64::INFINITY, |&(_, f)| f)
}

/// Inverse kinematics of every desired sample under the design's lengths.
pub fn joint_waypoints(design: &DesignVector, desired: &[Point], elbows: ElbowConfig) -> Result<Vec<JointState>> {
    let params = design.params()?;
    par::try_map(Execution::Sequential, desired, |i, p| {
        mechanism::inverse_kinematics(&params, *p, elbows).map_err(|e| Error::at(i, e))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_generated_path_has_zero_error() {
        let g = DesignVector::prototype();
        let path = g.trace(40).unwrap();
        assert_eq!(objective_error(&g, path.points()).unwrap(), 0.0);
    }

    #[test]
    fn uniform_shift_gives_shift_error() {
        let g = DesignVector::prototype();
        let path = g.trace(40).unwrap().translated(1.0, 0.0);
        assert!((objective_error(&g, path.points()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_samples_are_penalized() {
        let mut d = DesignVector::prototype();
        d.l2 = 30.0;
        let desired = DesignVector::prototype().trace(10).unwrap();
        assert!(objective_error(&d, desired.points()).unwrap() >= INFEASIBLE_SAMPLE_PENALTY_MM);
    }

    #[test]
    fn non_finite_design_is_rejected() {
        let mut d = DesignVector::prototype();
        d.theta2_end = f64::NAN;
        assert!(matches!(
            objective_error(&d, &[Point::default()]),
            Err(Error::InvalidDesign(_))
        ));
    }

    #[test]
    fn bounds_validation() {
        let b = Bounds::default();
        assert!(Bounds::new(*b.upper(), *b.lower()).is_err());
        let mut d = DesignVector::prototype();
        d.l0 = 250.0;
        assert!(matches!(
            b.check(&d),
            Err(Error::InitOutOfBounds { component: "l0", .. })
        ));
    }

    #[test]
    fn zero_iteration_budget_returns_init() {
        let g = DesignVector::prototype();
        let path = g.trace(30).unwrap();
        let mut init = g;
        init.l1 *= 1.05;
        let opts = SynthesisOptions {
            max_iterations: 0,
            ..Default::default()
        };
        let r = synthesize(&path, &Bounds::default(), &init, &opts).unwrap();
        assert_eq!(r.best, init);
        assert!(!r.converged);
        assert_eq!(r.stop_reason, StopReason::MaxIterations);
    }

    #[test]
    fn optimal_init_stays_put() {
        let g = DesignVector::prototype();
        let path = g.trace(30).unwrap();
        let r = synthesize(&path, &Bounds::default(), &g, &SynthesisOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.history.len() <= 3);
        assert!(r.error_mm < 1e-9);
    }

    #[test]
    fn recovers_prototype_from_perturbed_lengths() {
        let g = DesignVector::prototype();
        let path = g.trace(50).unwrap();
        let mut init = g;
        init.l0 *= 1.05;
        init.l1 *= 1.05;
        init.l2 *= 1.05;
        let opts = SynthesisOptions::default();
        let r = synthesize(&path, &Bounds::default(), &init, &opts).unwrap();
        assert!(r.error_mm < 0.5, "E = {}", r.error_mm);
        for (got, want) in [(r.best.l0, g.l0), (r.best.l1, g.l1), (r.best.l2, g.l2)] {
            assert!((got - want).abs() / want < 0.05, "{got} vs {want}");
        }
        assert!(r.evaluations <= opts.max_evaluations);
        assert!(r.history.windows(2).all(|w| w[1].1 <= w[0].1));
        assert!(r.constraint_report.geometric_ok);
    }

    #[test]
    fn multistart_is_deterministic() {
        let g = DesignVector::prototype();
        let path = g.trace(30).unwrap();
        let opts = SynthesisOptions {
            max_iterations: 10,
            ..Default::default()
        };
        let run = |exec| synthesize_multistart(&path, &Bounds::default(), Some(&g), &opts, 4, 7, exec).unwrap();
        let a = run(Execution::Sequential);
        let b = run(Execution::Parallel);
        assert_eq!(a, b);
        assert_eq!(a.best_index, 0);
    }

    #[test]
    fn waypoints_from_inverse_kinematics() {
        let g = DesignVector::prototype();
        let p = mechanism::forward_kinematics(&g.params().unwrap(), g.end()).unwrap();
        let js = joint_waypoints(&g, &[p], ElbowConfig::UP).unwrap();
        assert!((js[0].theta1 - g.theta1_end).abs() < 1e-9);
        assert!((js[0].theta2 - g.theta2_end).abs() < 1e-9);

        let js = joint_waypoints(&g, &[p, p], ElbowConfig::UP).unwrap();
        assert_eq!(js[0], js[1]);

        let far = Point::new(g.l0 / 2.0, g.l1 + g.l2 + 1.0);
        match joint_waypoints(&g, &[p, p, far], ElbowConfig::UP) {
            Err(Error::AtIndex { index: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
