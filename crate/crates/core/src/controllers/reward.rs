use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{end_effector_height, mechanical_energy, upright_energy, ModelParams, State};
use crate::{Error, Result};

const HSAC_POSITION: f64 = 0.05;
const HSAC_VELOCITY: f64 = 0.02;
const HSAC_ACTION: f64 = 0.25;
const HSAC_ACTION_RATE: f64 = 0.02;
const HSAC_POWER: f64 = 0.05;

/// Robot-specific constants of the history-policy reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistorySacPreset {
    Pendubot,
    Acrobot,
}

impl HistorySacPreset {
    pub fn beta(self) -> f64 {
        match self {
            HistorySacPreset::Pendubot => 0.1,
            HistorySacPreset::Acrobot => 0.025,
        }
    }

    /// Index of the joint velocity entering the power term.
    pub fn power_joint(self) -> usize {
        match self {
            HistorySacPreset::Pendubot => 0,
            HistorySacPreset::Acrobot => 1,
        }
    }

    pub fn for_robot(kind: crate::RobotKind) -> Self {
        match kind {
            crate::RobotKind::Pendubot => HistorySacPreset::Pendubot,
            crate::RobotKind::Acrobot => HistorySacPreset::Acrobot,
        }
    }
}

/// Non-positive shaped reward with its maximum of 0 at the upright rest
/// state with zero action.
///
/// `a` and `a_prev` are the active joint's torque normalized by its limit.
/// The angle terms use the raw joint angles.
pub fn reward_history_sac(
    s: &State,
    a: f64,
    a_prev: f64,
    dt: f64,
    preset: HistorySacPreset,
) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
    }
    let qd_i = [s.qd1, s.qd2][preset.power_joint()];
    let position = HSAC_POSITION * ((s.q1 - PI).powi(2) + s.q2 * s.q2);
    let penalty = HSAC_VELOCITY * (s.qd1 * s.qd1 + s.qd2 * s.qd2)
        + HSAC_ACTION * (a * a + 2.0 * a.abs())
        + HSAC_ACTION_RATE * ((a - a_prev) / dt).abs()
        + HSAC_POWER * (qd_i * a) * preset.beta();
    Ok(-position - penalty)
}

/// The `V` term shared by both branches of the surrogate reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VTerm {
    Off,
    /// `-weight * |E - E_upright|`.
    EnergyGap {
        weight: f64,
    },
}

impl VTerm {
    fn value(self, p: &ModelParams, s: &State) -> f64 {
        match self {
            VTerm::Off => 0.0,
            VTerm::EnergyGap { weight } => {
                -weight * (mechanical_energy(p, s) - upright_energy(p)).abs()
            }
        }
    }
}

/// Coefficients of the two-branch surrogate reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolSacConfig {
    pub alpha: f64,
    pub beta: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub eta: f64,
    /// Height threshold selecting the upper branch (m).
    pub y_th: f64,
    pub v_term: VTerm,
}

impl Default for EvolSacConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.01,
            rho1: 0.1,
            rho2: 0.1,
            phi1: 0.01,
            phi2: 0.01,
            eta: 0.001,
            y_th: 0.45,
            v_term: VTerm::Off,
        }
    }
}

/// Surrogate reward: above `y_th` it rewards an extended second link and
/// penalizes elapsed time, below it penalizes effort and joint speed.
///
/// `a` is the normalized action, `delta_a` its change since the previous
/// step, `elapsed` the time since trial start.
pub fn reward_evolsac(
    p: &ModelParams,
    s: &State,
    a: f64,
    delta_a: f64,
    elapsed: f64,
    cfg: &EvolSacConfig,
) -> f64 {
    let v = cfg.v_term.value(p, s);
    if end_effector_height(p, s) > cfg.y_th {
        v + cfg.alpha * (1.0 + s.q2.cos()).powi(2)
            - cfg.beta * elapsed
            - cfg.rho1 * a * a
            - cfg.phi1 * delta_a
    } else {
        v - cfg.rho2 * a * a - cfg.phi2 * delta_a - cfg.eta * (s.qd1 * s.qd1 + s.qd2 * s.qd2)
    }
}

/// Reward settings for both training objectives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub evolsac: EvolSacConfig,
    pub history_sac: HistorySacPreset,
}

impl RewardConfig {
    pub fn for_robot(kind: crate::RobotKind) -> Self {
        Self {
            evolsac: EvolSacConfig::default(),
            history_sac: HistorySacPreset::for_robot(kind),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn history_reward_values() {
        let up = State::UPRIGHT;
        let r = reward_history_sac(&up, 0.0, 0.0, 0.01, HistorySacPreset::Pendubot).unwrap();
        assert_eq!(r, 0.0);

        let r = reward_history_sac(&State::HANGING, 0.0, 0.0, 0.01, HistorySacPreset::Pendubot)
            .unwrap();
        assert!((r + 0.05 * PI * PI).abs() < 1e-15);
        assert!((r + 0.493480).abs() < 1e-6);

        let r = reward_history_sac(&up, 1.0, 1.0, 0.01, HistorySacPreset::Pendubot).unwrap();
        assert!((r + 0.75).abs() < 1e-15);
    }

    #[test]
    fn history_reward_power_term_selects_joint() {
        let s = State::new(PI, 0.0, 2.0, 0.0);
        let base = -0.02 * 4.0 - 0.25 * 3.0;
        let pend = reward_history_sac(&s, 1.0, 1.0, 0.01, HistorySacPreset::Pendubot).unwrap();
        assert!((pend - (base - 0.05 * 2.0 * 0.1)).abs() < 1e-14);
        let acro = reward_history_sac(&s, 1.0, 1.0, 0.01, HistorySacPreset::Acrobot).unwrap();
        assert!((acro - base).abs() < 1e-14);
    }

    #[test]
    fn history_reward_rejects_bad_dt() {
        assert!(
            reward_history_sac(&State::UPRIGHT, 0.0, 0.0, 0.0, HistorySacPreset::Acrobot).is_err()
        );
    }

    #[test]
    fn evolsac_branches() {
        let p = ModelParams::default();
        let cfg = EvolSacConfig::default();
        assert_eq!(
            reward_evolsac(&p, &State::HANGING, 0.0, 0.0, 0.0, &cfg),
            0.0
        );

        let cfg1 = EvolSacConfig { alpha: 1.0, ..cfg };
        assert_eq!(
            reward_evolsac(&p, &State::UPRIGHT, 0.0, 0.0, 0.0, &cfg1),
            4.0
        );
    }

    #[test]
    fn evolsac_eta_is_linear() {
        let p = ModelParams::default();
        let s = State::new(0.2, 0.1, 1.5, -2.0);
        let cfg = EvolSacConfig::default();
        let doubled = EvolSacConfig {
            eta: 2.0 * cfg.eta,
            ..cfg
        };
        let r1 = reward_evolsac(&p, &s, 0.3, 0.1, 1.0, &cfg);
        let r2 = reward_evolsac(&p, &s, 0.3, 0.1, 1.0, &doubled);
        let speed = 1.5f64.powi(2) + 2.0f64.powi(2);
        assert!((r1 - r2 - cfg.eta * speed).abs() < 1e-15);
    }

    #[test]
    fn evolsac_energy_gap_vanishes_upright() {
        let p = ModelParams::default();
        let cfg = EvolSacConfig {
            v_term: VTerm::EnergyGap { weight: 2.0 },
            beta: 0.0,
            ..EvolSacConfig::default()
        };
        let r = reward_evolsac(&p, &State::UPRIGHT, 0.0, 0.0, 3.0, &cfg);
        assert!((r - 4.0).abs() < 1e-12);
        assert!(reward_evolsac(&p, &State::HANGING, 0.0, 0.0, 0.0, &cfg) < 0.0);
    }

    proptest! {
        #[test]
        fn history_reward_non_positive(
            q1 in -10.0..10.0f64, q2 in -10.0..10.0f64,
            qd1 in -30.0..30.0f64, qd2 in -30.0..30.0f64,
            a in -1.0..1.0f64, a_prev in -1.0..1.0f64, acro: bool,
        ) {
            let preset = if acro { HistorySacPreset::Acrobot } else { HistorySacPreset::Pendubot };
            let r = reward_history_sac(&State::new(q1, q2, qd1, qd2), a, a_prev, 0.002, preset).unwrap();
            prop_assert!(r <= 0.0);
        }
    }
}
