//! Double pendulum plant: model, integration, actuation rules and the
//! closed-loop rollout with injected imperfections.

mod actuation;
mod integrate;
mod model;
mod plant;
mod trajectory;

pub use actuation::{
    apply_actuation, friction_compensation, responsive_torque, PASSIVE_TORQUE_LIMIT,
};
pub use integrate::{step, DEFAULT_DT};
pub use model::{
    end_effector_height, forward_dynamics, mass_matrix, mechanical_energy, upright_energy,
    ModelParams, ParamField, RobotKind, State, FRICTION_SMOOTHING,
};
pub use plant::{rollout, ImperfectionConfig, TrialSpec, DEFAULT_T_FINAL};
pub use trajectory::{Trajectory, TRAJECTORY_HEADER, TRAJECTORY_HEADER_EXTENDED};
