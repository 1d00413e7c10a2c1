use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::actuation::{apply_actuation, responsive_torque};
use super::integrate::{step, DEFAULT_DT};
use super::model::{ModelParams, RobotKind, State};
use super::trajectory::Trajectory;
use crate::controllers::Controller;
use crate::robustness::PerturbationProfile;
use crate::seed::{self, stream};
use crate::{Error, Result};

/// Trial length of the competition protocol.
pub const DEFAULT_T_FINAL: f64 = 10.0;

/// Fixed settings of a single closed-loop trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub kind: RobotKind,
    pub dt: f64,
    pub t_final: f64,
    pub x0: State,
    /// Model used for torque limits and passive-joint friction compensation.
    /// `None` uses the simulated plant's own parameters.
    pub actuator_model: Option<ModelParams>,
}

impl TrialSpec {
    pub fn new(kind: RobotKind) -> Self {
        Self {
            kind,
            dt: DEFAULT_DT,
            t_final: DEFAULT_T_FINAL,
            x0: State::HANGING,
            actuator_model: None,
        }
    }

    pub fn with_t_final(mut self, t_final: f64) -> Self {
        self.t_final = t_final;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    /// Number of integration steps; the trajectory holds one more sample.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_final > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "dt and t_final must be > 0 (dt={}, t_final={})",
                self.dt, self.t_final
            )));
        }
        if !self.x0.is_finite() {
            return Err(Error::InvalidArgument("initial state is not finite".into()));
        }
        Ok(())
    }
}

/// Imperfections injected between controller and plant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImperfectionConfig {
    /// Std. dev. of Gaussian noise on measured velocities (rad/s).
    pub vel_noise_sigma: f64,
    /// Std. dev. of Gaussian noise on motor torques (N·m).
    pub torque_noise_sigma: f64,
    /// Motor responsiveness factor in (0, 1]; 1 applies the command directly.
    pub k_resp: f64,
    /// Measurement delay (s).
    pub delay: f64,
    pub perturbation: Option<PerturbationProfile>,
    pub rng_seed: u64,
}

impl Default for ImperfectionConfig {
    fn default() -> Self {
        Self {
            vel_noise_sigma: 0.0,
            torque_noise_sigma: 0.0,
            k_resp: 1.0,
            delay: 0.0,
            perturbation: None,
            rng_seed: 0,
        }
    }
}

impl ImperfectionConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.vel_noise_sigma >= 0.0
            && self.torque_noise_sigma >= 0.0
            && self.delay >= 0.0
            && self.k_resp > 0.0
            && self.k_resp <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid imperfection config: {self:?}"
            )))
        }
    }

    pub fn with_perturbation(mut self, profile: PerturbationProfile) -> Self {
        self.perturbation = Some(profile);
        self
    }
}

/// Runs one closed-loop trial.
///
/// Per step: delayed true state plus velocity noise is measured, the
/// controller produces a command, the command passes the motor response
/// filter, torque noise is added, the actuation rules clamp and select the
/// motor torque, and the perturbation torque is added on top before the
/// plant is integrated. Divergence ends the trajectory early with
/// `diverged` set.
pub fn rollout(
    controller: &mut dyn Controller,
    spec: &TrialSpec,
    p: &ModelParams,
    imp: &ImperfectionConfig,
) -> Result<Trajectory> {
    spec.validate()?;
    imp.validate()?;

    let n = spec.steps();
    let dt = spec.dt;
    let delay_steps = (imp.delay / dt).round() as usize;
    let actuator = spec.actuator_model.as_ref().unwrap_or(p);
    let mut vel_rng = seed::rng(imp.rng_seed, &[stream::VEL_NOISE]);
    let mut tau_rng = seed::rng(imp.rng_seed, &[stream::TORQUE_NOISE]);

    controller.reset();
    let mut traj = Trajectory::with_capacity(dt, n + 1);
    let mut state = spec.x0;
    let mut prev_motor = [0.0; 2];

    for k in 0..=n {
        let t = k as f64 * dt;

        // Samples older than the first one are held at the initial state.
        let mut measured = if delay_steps == 0 || k == 0 {
            state
        } else {
            traj.states[k.saturating_sub(delay_steps)]
        };
        if imp.vel_noise_sigma > 0.0 {
            let n1: f64 = StandardNormal.sample(&mut vel_rng);
            let n2: f64 = StandardNormal.sample(&mut vel_rng);
            measured.qd1 += imp.vel_noise_sigma * n1;
            measured.qd2 += imp.vel_noise_sigma * n2;
        }

        let mut command = controller.get_control(&measured, t);
        if !command.iter().all(|v| v.is_finite()) {
            command = [0.0; 2];
        }

        let mut motor = if imp.k_resp == 1.0 {
            command
        } else {
            responsive_torque(prev_motor, command, imp.k_resp)
        };
        if imp.torque_noise_sigma > 0.0 {
            let n1: f64 = StandardNormal.sample(&mut tau_rng);
            let n2: f64 = StandardNormal.sample(&mut tau_rng);
            motor[0] += imp.torque_noise_sigma * n1;
            motor[1] += imp.torque_noise_sigma * n2;
        }
        let motor = apply_actuation(spec.kind, motor, actuator, &measured);
        prev_motor = motor;

        let pert = imp
            .perturbation
            .as_ref()
            .map_or([0.0; 2], |profile| profile.torque_at(t));

        traj.push(t, state, motor, command, pert);

        if k < n {
            let total = [motor[0] + pert[0], motor[1] + pert[1]];
            match step(p, &state, total, dt) {
                Ok(next) => state = next,
                Err(Error::Diverged(_)) => {
                    traj.diverged = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Records every measurement it receives and outputs a fixed torque.
    struct Recorder {
        seen: Vec<State>,
        out: [f64; 2],
    }

    impl Controller for Recorder {
        fn reset(&mut self) {
            self.seen.clear();
        }

        fn get_control(&mut self, measured: &State, _t: f64) -> [f64; 2] {
            self.seen.push(*measured);
            self.out
        }
    }

    #[test]
    fn sample_count_and_times() {
        let p = ModelParams::default();
        let spec = TrialSpec::new(RobotKind::Pendubot).with_t_final(1.0);
        let mut c = Recorder {
            seen: vec![],
            out: [0.0; 2],
        };
        let traj = rollout(&mut c, &spec, &p, &ImperfectionConfig::default()).unwrap();
        assert_eq!(traj.len(), 501);
        assert_eq!(c.seen.len(), 501);
        assert!((traj.duration() - 1.0).abs() < 1e-12);
        assert!(!traj.diverged);
    }

    #[test]
    fn delayed_measurements() {
        let p = ModelParams::default();
        let spec = TrialSpec {
            x0: State::new(1.0, 0.5, 0.0, 0.0),
            ..TrialSpec::new(RobotKind::Pendubot).with_t_final(0.2)
        };
        let imp = ImperfectionConfig {
            delay: 0.01,
            ..Default::default()
        };
        let mut c = Recorder {
            seen: vec![],
            out: [0.3, 0.0],
        };
        let traj = rollout(&mut c, &spec, &p, &imp).unwrap();
        for k in 0..traj.len() {
            let expected = traj.states[k.saturating_sub(5)];
            assert_eq!(c.seen[k], expected, "sample {k}");
        }
    }

    #[test]
    fn response_filter_lags_command() {
        let p = ModelParams::default();
        let spec = TrialSpec::new(RobotKind::Pendubot).with_t_final(0.01);
        let imp = ImperfectionConfig {
            k_resp: 0.5,
            ..Default::default()
        };
        let mut c = Recorder {
            seen: vec![],
            out: [2.0, 0.0],
        };
        let traj = rollout(&mut c, &spec, &p, &imp).unwrap();
        assert_eq!(traj.tau[0][0], 1.0);
        assert_eq!(traj.tau[1][0], 1.5);
        assert_eq!(traj.tau[2][0], 1.75);
        assert!(traj.tau_des.iter().all(|t| t[0] == 2.0));
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let p = ModelParams::default();
        let spec = TrialSpec::new(RobotKind::Acrobot).with_t_final(0.5);
        let imp = ImperfectionConfig {
            vel_noise_sigma: 0.2,
            torque_noise_sigma: 0.1,
            rng_seed: 42,
            ..Default::default()
        };
        let run = |imp: &ImperfectionConfig| {
            let mut c = Recorder {
                seen: vec![],
                out: [0.0, 1.0],
            };
            rollout(&mut c, &spec, &p, imp).unwrap()
        };
        let a = run(&imp);
        assert_eq!(a, run(&imp));
        let other = ImperfectionConfig {
            rng_seed: 43,
            ..imp
        };
        assert_ne!(a, run(&other));
    }

    #[test]
    fn rejects_invalid_config() {
        let p = ModelParams::default();
        let spec = TrialSpec::new(RobotKind::Acrobot).with_t_final(0.1);
        let mut c = Recorder {
            seen: vec![],
            out: [0.0; 2],
        };
        for imp in [
            ImperfectionConfig {
                k_resp: 0.0,
                ..Default::default()
            },
            ImperfectionConfig {
                k_resp: 1.5,
                ..Default::default()
            },
            ImperfectionConfig {
                delay: -0.1,
                ..Default::default()
            },
        ] {
            assert!(rollout(&mut c, &spec, &p, &imp).is_err());
        }
    }

    #[test]
    fn divergence_is_flagged() {
        struct Blowup;
        impl Controller for Blowup {
            fn reset(&mut self) {}
            fn get_control(&mut self, _: &State, _: f64) -> [f64; 2] {
                [0.0; 2]
            }
        }
        let p = ModelParams::default();
        let spec = TrialSpec {
            x0: State::new(0.0, 0.0, 1e300, 1e300),
            ..TrialSpec::new(RobotKind::Acrobot).with_t_final(1.0)
        };
        let traj = rollout(&mut Blowup, &spec, &p, &ImperfectionConfig::default()).unwrap();
        assert!(traj.diverged);
        assert!(traj.len() < spec.steps() + 1);
    }
}
