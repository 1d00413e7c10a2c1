//! Controller abstraction and the concrete controllers shipped with the
//! benchmark, plus the reward functions used for policy training.

mod baseline;
mod lqr;
mod policy;
mod reward;

pub use baseline::{EnergyLqrConfig, EnergyLqrController, SwingMode};
pub use lqr::{care, linearize_upright, riccati_residual, LqrGain};
pub use policy::{
    PolicyController, PolicyParams, FEATURE_DIM, HISTORY_WINDOW, POLICY_MAGIC, POLICY_VERSION,
    VELOCITY_SCALE,
};
pub use reward::{
    reward_evolsac, reward_history_sac, EvolSacConfig, HistorySacPreset, RewardConfig, VTerm,
};

use crate::dynamics::State;

/// A single-trial feedback controller.
///
/// Controllers are deterministic state machines: after `reset`, the same
/// measurement sequence yields the same command sequence.
pub trait Controller: Send {
    fn reset(&mut self);

    /// Commanded torque pair for the current measurement. The plant side
    /// masks the passive joint and clamps to the actuator limits.
    fn get_control(&mut self, measured: &State, t: f64) -> [f64; 2];

    /// True once the controller has seen a non-finite measurement.
    fn faulted(&self) -> bool {
        false
    }
}

impl<C: Controller + ?Sized> Controller for Box<C> {
    fn reset(&mut self) {
        (**self).reset()
    }

    fn get_control(&mut self, measured: &State, t: f64) -> [f64; 2] {
        (**self).get_control(measured, t)
    }

    fn faulted(&self) -> bool {
        (**self).faulted()
    }
}

/// Builds fresh controller instances, one per trial.
pub trait ControllerFactory: Sync {
    fn build(&self) -> Box<dyn Controller>;
}

impl<F> ControllerFactory for F
where
    F: Fn() -> Box<dyn Controller> + Sync,
{
    fn build(&self) -> Box<dyn Controller> {
        self()
    }
}

/// Always commands zero torque.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroController;

impl Controller for ZeroController {
    fn reset(&mut self) {}

    fn get_control(&mut self, _measured: &State, _t: f64) -> [f64; 2] {
        [0.0; 2]
    }
}
