//! Design and analysis toolkit for symmetric planar five-bar linkages used as
//! finger flexion-extension rehabilitators.
//!
//! The pipeline runs from a desired fingertip path to link dimensions
//! ([`synthesis`]), through closed-form kinematics ([`mechanism`]), piecewise
//! quintic joint trajectories ([`planner`]) and encoder setpoints
//! ([`actuation`]), to rotation-angle analysis of measured IMU logs
//! ([`analysis`]). File formats and the command-line surface live in [`io`]
//! and [`cli`].
//!
//! Angles are radians internally and degrees at every file and CLI boundary.
//! Lengths are millimeters, times are seconds.

// Negated comparisons are how NaN gets rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuation;
pub mod analysis;
pub mod cli;
mod error;
pub mod io;
mod linalg;
pub mod mechanism;
pub mod par;
pub mod planner;
pub mod plot;
pub mod synthesis;

pub use error::{Error, Result};
pub use mechanism::{ElbowConfig, JointState, MechanismParams, PlanarPath, Point};
pub use par::Execution;
