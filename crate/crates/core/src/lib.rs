//! Benchmark and controller-synthesis toolkit for the underactuated double
//! pendulum swing-up task.
//!
//! The crate is organized bottom-up:
//!
//! - [`dynamics`]: plant model, RK4 integration, actuation rules and the
//!   imperfection pipeline used for closed-loop rollouts.
//! - [`scoring`]: performance criteria and the success-gated score.
//! - [`robustness`]: severity sweeps, perturbation batteries and the
//!   aggregated robustness score.
//! - [`controllers`]: controller trait, neural policies, the energy-shaping
//!   + LQR reference controller and training rewards.
//! - [`optimize`]: SNES, differential evolution and system identification.
//! - [`io`]: configuration, reports and leaderboard persistence.
//!
//! Data-parallel loops (sweeps, population evaluation, particle rollouts) run
//! on rayon when the `parallel` feature is enabled and sequentially
//! otherwise. Results never depend on the execution order.

// `!(x > 0.0)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controllers;
pub mod dynamics;
mod error;
pub mod io;
pub mod optimize;
pub mod par;
pub mod robustness;
pub mod scoring;
pub mod seed;

pub use error::{Error, Result};

pub use controllers::{Controller, ControllerFactory};
pub use dynamics::{ModelParams, RobotKind, State, Trajectory};
