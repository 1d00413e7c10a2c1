use super::model::{ModelParams, RobotKind, State, FRICTION_SMOOTHING};

/// Torque budget on the passive joint, reserved for friction compensation.
pub const PASSIVE_TORQUE_LIMIT: f64 = 0.5;

/// Model-based friction estimate `b*qd + cf*tanh(k*qd)` for one joint,
/// clamped to the passive-joint budget.
pub fn friction_compensation(p: &ModelParams, s: &State, joint: usize) -> f64 {
    let (b, cf, qd) = match joint {
        0 => (p.b1, p.cf1, s.qd1),
        _ => (p.b2, p.cf2, s.qd2),
    };
    (b * qd + cf * (FRICTION_SMOOTHING * qd).tanh())
        .clamp(-PASSIVE_TORQUE_LIMIT, PASSIVE_TORQUE_LIMIT)
}

/// Maps a commanded torque pair onto the robot's actuators.
///
/// The active joint is clamped to its torque limit. The passive joint
/// ignores the command and receives only friction compensation.
pub fn apply_actuation(kind: RobotKind, u: [f64; 2], p: &ModelParams, s: &State) -> [f64; 2] {
    let active = kind.active_joint();
    let passive = kind.passive_joint();
    let limit = p.tau_limits()[active];
    let mut out = [0.0; 2];
    out[active] = u[active].clamp(-limit, limit);
    out[passive] = friction_compensation(p, s, passive);
    out
}

/// First-order motor response `tau_prev + k_resp * (tau_des - tau_prev)`.
pub fn responsive_torque(tau_prev: [f64; 2], tau_des: [f64; 2], k_resp: f64) -> [f64; 2] {
    [
        tau_prev[0] + k_resp * (tau_des[0] - tau_prev[0]),
        tau_prev[1] + k_resp * (tau_des[1] - tau_prev[1]),
    ]
}
