use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use super::lqr::{linearize_upright, LqrGain};
use super::Controller;
use crate::dynamics::{
    mass_matrix, mechanical_energy, upright_energy, ModelParams, RobotKind, State,
    FRICTION_SMOOTHING,
};
use crate::Result;

/// Gains of the energy-shaping swing-up and the LQR stabilizer.
///
/// The swing-up law drives the storage function
/// `V = (E - E_up)^2 / 2 + kd * qd_a^2 / 2 + kp * (q_a - q_a*)^2 / 2`
/// down along trajectories (`dV/dt = -kv * qd_a^2`), where `a` is the
/// actuated joint and `q_a*` its upright value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyLqrConfig {
    pub kp: f64,
    pub kd: f64,
    pub kv: f64,
    /// Diagonal of the LQR state weight, state `(q1 - pi, q2, qd1, qd2)`.
    pub q_diag: [f64; 4],
    pub r: f64,
    /// Switch to LQR when the cost-to-go drops below this value.
    pub catch_level: f64,
    /// Fall back to swing-up when the cost-to-go exceeds this value.
    pub release_level: f64,
    /// Torque applied while the arm is at rest below the target energy.
    /// Hanging rest is a fixed point of the acrobot swing-up law.
    pub kick: f64,
}

impl EnergyLqrConfig {
    pub fn for_robot(kind: RobotKind) -> Self {
        match kind {
            RobotKind::Pendubot => Self {
                kp: 20.0,
                kd: 0.2,
                kv: 2.0,
                q_diag: [10.0, 10.0, 0.5, 0.5],
                r: 0.5,
                catch_level: 2.0,
                release_level: 20.0,
                kick: 0.0,
            },
            RobotKind::Acrobot => Self {
                kp: 20.0,
                kd: 0.02,
                kv: 0.5,
                q_diag: [10.0, 10.0, 0.5, 0.5],
                r: 0.5,
                catch_level: 50.0,
                release_level: 500.0,
                kick: 2.0,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwingMode {
    SwingUp,
    Balance,
}

/// Energy-shaping swing-up with an LQR catch about the upright rest state.
#[derive(Debug, Clone)]
pub struct EnergyLqrController {
    kind: RobotKind,
    model: ModelParams,
    cfg: EnergyLqrConfig,
    lqr: LqrGain,
    target_energy: f64,
    mode: SwingMode,
}

impl EnergyLqrController {
    /// Fails when the Riccati equation of the linearized plant has no
    /// stabilizing solution.
    pub fn new(kind: RobotKind, model: ModelParams, cfg: EnergyLqrConfig) -> Result<Self> {
        let (a, b) = linearize_upright(&model, kind);
        let q = Matrix4::from_diagonal(&Vector4::from(cfg.q_diag));
        let lqr = LqrGain::solve(&a, &b, &q, cfg.r)?;
        Ok(Self {
            kind,
            model,
            cfg,
            lqr,
            target_energy: upright_energy(&model),
            mode: SwingMode::SwingUp,
        })
    }

    pub fn with_defaults(kind: RobotKind, model: ModelParams) -> Result<Self> {
        Self::new(kind, model, EnergyLqrConfig::for_robot(kind))
    }

    pub fn gain(&self) -> &LqrGain {
        &self.lqr
    }

    pub fn mode(&self) -> SwingMode {
        self.mode
    }

    fn upright_error(s: &State) -> Vector4<f64> {
        Vector4::new(wrap(s.q1 - PI), wrap(s.q2), s.qd1, s.qd2)
    }

    fn swing_up(&self, s: &State) -> f64 {
        let p = &self.model;
        let a = self.kind.active_joint();
        let [[m11, m12], [_, m22]] = mass_matrix(p, s.q2);
        let det = m11 * m22 - m12 * m12;
        let m_inv = [[m22 / det, -m12 / det], [-m12 / det, m11 / det]];

        let h = p.m2 * p.l1 * p.r2 * s.q2.sin();
        let s12 = (s.q1 + s.q2).sin();
        let bias = [
            -2.0 * h * s.qd1 * s.qd2 - h * s.qd2 * s.qd2
                + p.g * (p.m1 * p.r1 + p.m2 * p.l1) * s.q1.sin()
                + p.m2 * p.g * p.r2 * s12,
            h * s.qd1 * s.qd1 + p.m2 * p.g * p.r2 * s12,
        ];
        let minv_bias = m_inv[a][0] * bias[0] + m_inv[a][1] * bias[1];

        let (q_a, qd_a, q_star) = match self.kind {
            RobotKind::Pendubot => (s.q1, s.qd1, PI),
            RobotKind::Acrobot => (s.q2, s.qd2, 0.0),
        };
        let energy_gap = mechanical_energy(p, s) - self.target_energy;
        let denom = energy_gap + self.cfg.kd * m_inv[a][a];
        let numer = -self.cfg.kv * qd_a - self.cfg.kp * (q_a - q_star) + self.cfg.kd * minv_bias;
        if self.cfg.kick != 0.0 && energy_gap < 0.0 && s.qd1.abs() + s.qd2.abs() < 1e-3 {
            return self.cfg.kick;
        }
        if denom.abs() < 1e-9 {
            return 0.0;
        }
        numer / denom
    }

    fn friction_feedforward(&self, s: &State) -> f64 {
        let p = &self.model;
        match self.kind {
            RobotKind::Pendubot => p.b1 * s.qd1 + p.cf1 * (FRICTION_SMOOTHING * s.qd1).tanh(),
            RobotKind::Acrobot => p.b2 * s.qd2 + p.cf2 * (FRICTION_SMOOTHING * s.qd2).tanh(),
        }
    }
}

/// Wraps an angle to `(-pi, pi]`.
fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

impl Controller for EnergyLqrController {
    fn reset(&mut self) {
        self.mode = SwingMode::SwingUp;
    }

    fn get_control(&mut self, measured: &State, _t: f64) -> [f64; 2] {
        if !measured.is_finite() {
            return [0.0; 2];
        }
        let err = Self::upright_error(measured);
        let cost = self.lqr.cost_to_go(&err);
        self.mode = match self.mode {
            SwingMode::SwingUp if cost < self.cfg.catch_level => SwingMode::Balance,
            SwingMode::Balance if cost > self.cfg.release_level => SwingMode::SwingUp,
            m => m,
        };
        let u = match self.mode {
            SwingMode::Balance => self.lqr.control(&err),
            SwingMode::SwingUp => self.swing_up(measured),
        } + self.friction_feedforward(measured);

        let active = self.kind.active_joint();
        let limit = self.model.tau_limits()[active];
        let mut out = [0.0; 2];
        out[active] = u.clamp(-limit, limit);
        out
    }
}
