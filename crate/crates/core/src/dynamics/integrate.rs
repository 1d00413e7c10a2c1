use super::model::{forward_dynamics, ModelParams, State};
use crate::{Error, Result};

/// Default integration step: 2 ms (500 Hz).
pub const DEFAULT_DT: f64 = 0.002;

fn derivative(p: &ModelParams, s: &State, tau: [f64; 2]) -> Result<[f64; 4]> {
    let [a1, a2] = forward_dynamics(p, s, tau)?;
    Ok([s.qd1, s.qd2, a1, a2])
}

fn offset(s: &State, k: &[f64; 4], h: f64) -> State {
    State::new(
        s.q1 + h * k[0],
        s.q2 + h * k[1],
        s.qd1 + h * k[2],
        s.qd2 + h * k[3],
    )
}

/// One classical RK4 step with `tau` held constant over the interval.
pub fn step(p: &ModelParams, s: &State, tau: [f64; 2], dt: f64) -> Result<State> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
    }
    let k1 = derivative(p, s, tau)?;
    let k2 = derivative(p, &offset(s, &k1, 0.5 * dt), tau)?;
    let k3 = derivative(p, &offset(s, &k2, 0.5 * dt), tau)?;
    let k4 = derivative(p, &offset(s, &k3, dt), tau)?;
    let mut x = s.to_array();
    for i in 0..4 {
        x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    State::from_array(x).check_finite()
}
