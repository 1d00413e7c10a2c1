//! Performance criteria, swing-up success and the success-gated
//! performance score.
//!
//! Criterion definitions (left Riemann sums over the `n - 1` intervals of a
//! trajectory with `n` samples, applied motor torques):
//!
//! | criterion          | definition                                  |
//! |--------------------|---------------------------------------------|
//! | energy             | `sum_k sum_i abs(tau_i * qd_i) * dt`        |
//! | torque cost        | `sum_k sum_i tau_i^2 * dt`                  |
//! | torque smoothness  | mean of `norm(tau[k+1] - tau[k])`           |
//! | velocity cost      | `sum_k sum_i qd_i^2 * dt`                   |

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{end_effector_height, ModelParams, Trajectory};
use crate::{Error, Result};

/// Success threshold on the end-effector height (m).
pub const DEFAULT_THRESHOLD: f64 = 0.45;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criteria {
    pub success: bool,
    pub swingup_time: f64,
    pub energy: f64,
    pub torque_cost: f64,
    pub torque_smoothness: f64,
    pub velocity_cost: f64,
}

impl Criteria {
    /// Values in the order time, energy, torque cost, smoothness, velocity.
    pub fn values(&self) -> [f64; 5] {
        [
            self.swingup_time,
            self.energy,
            self.torque_cost,
            self.torque_smoothness,
            self.velocity_cost,
        ]
    }
}

/// Normalization weights, one per criterion, in the order of
/// [`Criteria::values`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    pub time: f64,
    pub energy: f64,
    pub torque_cost: f64,
    pub torque_smoothness: f64,
    pub velocity_cost: f64,
}

impl WeightSet {
    pub const SIMULATION: WeightSet = WeightSet {
        time: PI / 20.0,
        energy: PI / 60.0,
        torque_cost: PI / 20.0,
        torque_smoothness: 10.0 * PI,
        velocity_cost: PI / 400.0,
    };

    pub const HARDWARE: WeightSet = WeightSet {
        time: PI / 20.0,
        energy: PI / 60.0,
        torque_cost: PI / 100.0,
        torque_smoothness: PI / 4.0,
        velocity_cost: PI / 400.0,
    };

    pub fn values(&self) -> [f64; 5] {
        [
            self.time,
            self.energy,
            self.torque_cost,
            self.torque_smoothness,
            self.velocity_cost,
        ]
    }

    pub fn scaled(&self, k: f64) -> WeightSet {
        WeightSet {
            time: k * self.time,
            energy: k * self.energy,
            torque_cost: k * self.torque_cost,
            torque_smoothness: k * self.torque_smoothness,
            velocity_cost: k * self.velocity_cost,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WeightPreset {
    #[default]
    Sim,
    Hardware,
}

impl WeightPreset {
    pub fn weights(self) -> WeightSet {
        match self {
            WeightPreset::Sim => WeightSet::SIMULATION,
            WeightPreset::Hardware => WeightSet::HARDWARE,
        }
    }
}

impl fmt::Display for WeightPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightPreset::Sim => "sim",
            WeightPreset::Hardware => "hardware",
        })
    }
}

impl FromStr for WeightPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sim" | "simulation" => Ok(WeightPreset::Sim),
            "hardware" | "hw" => Ok(WeightPreset::Hardware),
            other => Err(Error::InvalidArgument(format!(
                "unknown weight preset `{other}`"
            ))),
        }
    }
}

/// Criteria plus the score they earn under a weight preset.
///
/// Serializes flat: the criteria fields, `score` and `weight_preset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    #[serde(flatten)]
    pub criteria: Criteria,
    pub score: f64,
    pub weight_preset: WeightPreset,
}

impl ScoreReport {
    pub fn new(criteria: Criteria, preset: WeightPreset) -> Self {
        Self {
            criteria,
            score: performance_score(&criteria, &preset.weights()),
            weight_preset: preset,
        }
    }

    pub fn weights(&self) -> WeightSet {
        self.weight_preset.weights()
    }

    /// Scores a trajectory end to end.
    pub fn evaluate(
        traj: &Trajectory,
        p: &ModelParams,
        threshold: f64,
        preset: WeightPreset,
    ) -> Result<Self> {
        Ok(Self::new(compute_criteria(traj, p, threshold)?, preset))
    }
}

/// True iff the end effector is strictly above `threshold` at the last sample.
/// Diverged trajectories never succeed.
pub fn check_success(traj: &Trajectory, p: &ModelParams, threshold: f64) -> bool {
    if traj.diverged {
        return false;
    }
    traj.final_state()
        .is_some_and(|s| end_effector_height(p, s) > threshold)
}

/// Earliest sample time after which the end effector stays above
/// `threshold` until the end; the trajectory duration if it never does.
pub fn swingup_time(traj: &Trajectory, p: &ModelParams, threshold: f64) -> f64 {
    if !check_success(traj, p, threshold) {
        return traj.duration();
    }
    let first_of_final_run = traj
        .states
        .iter()
        .rposition(|s| end_effector_height(p, s) <= threshold)
        .map_or(0, |k| k + 1);
    traj.time[first_of_final_run]
}

pub fn compute_criteria(traj: &Trajectory, p: &ModelParams, threshold: f64) -> Result<Criteria> {
    let n = traj.len();
    if n < 2 {
        return Err(Error::TrajectoryTooShort { len: n, min: 2 });
    }
    let dt = traj.dt;
    let mut energy = 0.0;
    let mut torque_cost = 0.0;
    let mut velocity_cost = 0.0;
    let mut smoothness = 0.0;
    for k in 0..n - 1 {
        let tau = traj.tau[k];
        let qd = traj.states[k].velocities();
        for i in 0..2 {
            energy += (tau[i] * qd[i]).abs() * dt;
            torque_cost += tau[i] * tau[i] * dt;
            velocity_cost += qd[i] * qd[i] * dt;
        }
        let next = traj.tau[k + 1];
        smoothness += ((next[0] - tau[0]).powi(2) + (next[1] - tau[1]).powi(2)).sqrt();
    }
    Ok(Criteria {
        success: check_success(traj, p, threshold),
        swingup_time: swingup_time(traj, p, threshold),
        energy,
        torque_cost,
        torque_smoothness: smoothness / (n - 1) as f64,
        velocity_cost,
    })
}

/// `success * (1 - mean_i tanh(w_i * c_i))`.
pub fn performance_score(c: &Criteria, w: &WeightSet) -> f64 {
    if !c.success {
        return 0.0;
    }
    let penalty: f64 = c
        .values()
        .iter()
        .zip(w.values())
        .map(|(ci, wi)| (wi * ci).tanh())
        .sum();
    1.0 - penalty / 5.0
}

pub fn average_score(reports: &[ScoreReport]) -> Result<f64> {
    if reports.is_empty() {
        return Err(Error::InvalidArgument("no score reports to average".into()));
    }
    Ok(reports.iter().map(|r| r.score).sum::<f64>() / reports.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::State;
    use proptest::prelude::*;

    fn zero_criteria(success: bool) -> Criteria {
        Criteria {
            success,
            swingup_time: 0.0,
            energy: 0.0,
            torque_cost: 0.0,
            torque_smoothness: 0.0,
            velocity_cost: 0.0,
        }
    }

    fn constant_traj(s: State, tau: [f64; 2], dt: f64, n: usize) -> Trajectory {
        let mut t = Trajectory::with_capacity(dt, n);
        for k in 0..n {
            t.push(k as f64 * dt, s, tau, tau, [0.0; 2]);
        }
        t
    }

    #[test]
    fn success_check() {
        let p = ModelParams::default();
        let up = constant_traj(State::UPRIGHT, [0.0; 2], 0.01, 3);
        assert!(check_success(&up, &p, DEFAULT_THRESHOLD));
        let down = constant_traj(State::HANGING, [0.0; 2], 0.01, 3);
        assert!(!check_success(&down, &p, DEFAULT_THRESHOLD));
        // Straight arm with the tip at exactly 0.45 m: l1 = 0.2, l2 = 0.3 at
        // q2 = 0 gives height -0.5 cos q1.
        let q1 = (-0.45f64 / 0.5).acos();
        let s = State::new(q1, 0.0, 0.0, 0.0);
        let h = end_effector_height(&p, &s);
        let boundary = constant_traj(s, [0.0; 2], 0.01, 3);
        assert!(!check_success(&boundary, &p, h));
        let mut diverged = up.clone();
        diverged.diverged = true;
        assert!(!check_success(&diverged, &p, DEFAULT_THRESHOLD));
    }

    #[test]
    fn swingup_time_cases() {
        let p = ModelParams::default();
        let up = constant_traj(State::UPRIGHT, [0.0; 2], 0.002, 100);
        assert_eq!(swingup_time(&up, &p, DEFAULT_THRESHOLD), 0.0);

        let down = constant_traj(State::HANGING, [0.0; 2], 0.002, 5001);
        assert!((swingup_time(&down, &p, DEFAULT_THRESHOLD) - 10.0).abs() < 1e-12);

        let mut t = Trajectory::with_capacity(0.002, 5000);
        for k in 0..5000 {
            // Brief excursion above the threshold early on does not count.
            let s = if k >= 1500 || (200..300).contains(&k) {
                State::UPRIGHT
            } else {
                State::HANGING
            };
            t.push(k as f64 * 0.002, s, [0.0; 2], [0.0; 2], [0.0; 2]);
        }
        assert!((swingup_time(&t, &p, DEFAULT_THRESHOLD) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn criteria_hand_values() {
        let p = ModelParams::default();
        let zero = constant_traj(State::HANGING, [0.0; 2], 0.01, 10);
        let c = compute_criteria(&zero, &p, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(c.values()[1..], [0.0; 4]);

        let s = State::new(0.0, 0.0, 2.0, 0.0);
        let t = constant_traj(s, [1.0, 0.0], 0.5, 3);
        let c = compute_criteria(&t, &p, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(c.energy, 2.0);
        assert_eq!(c.torque_cost, 1.0);
        assert_eq!(c.torque_smoothness, 0.0);
        assert_eq!(c.velocity_cost, 4.0);
    }

    #[test]
    fn torque_cost_is_quadratic() {
        let p = ModelParams::default();
        let mut t = Trajectory::with_capacity(0.01, 50);
        for k in 0..50 {
            let x = k as f64;
            t.push(
                x * 0.01,
                State::new(0.0, 0.0, x.cos(), 0.0),
                [x.sin(), 0.3 * x.cos()],
                [0.0; 2],
                [0.0; 2],
            );
        }
        let c1 = compute_criteria(&t, &p, DEFAULT_THRESHOLD).unwrap();
        for tau in &mut t.tau {
            tau[0] *= 2.0;
            tau[1] *= 2.0;
        }
        let c2 = compute_criteria(&t, &p, DEFAULT_THRESHOLD).unwrap();
        assert!((c2.torque_cost - 4.0 * c1.torque_cost).abs() <= 1e-12 * c2.torque_cost);
    }

    #[test]
    fn criteria_need_two_samples() {
        let p = ModelParams::default();
        let t = constant_traj(State::HANGING, [0.0; 2], 0.01, 1);
        assert!(matches!(
            compute_criteria(&t, &p, DEFAULT_THRESHOLD),
            Err(Error::TrajectoryTooShort { len: 1, min: 2 })
        ));
    }

    #[test]
    fn score_examples() {
        let w = WeightSet::SIMULATION;
        assert_eq!(performance_score(&zero_criteria(false), &w), 0.0);
        assert_eq!(performance_score(&zero_criteria(true), &w), 1.0);
        let c = Criteria {
            swingup_time: 10.0,
            ..zero_criteria(true)
        };
        let s = performance_score(&c, &w);
        assert!((s - (1.0 - (PI / 2.0).tanh() / 5.0)).abs() < 1e-15);
        assert!((s - 0.81657).abs() < 5e-6);
    }

    #[test]
    fn average() {
        let r = |score| ScoreReport {
            criteria: zero_criteria(true),
            score,
            weight_preset: WeightPreset::Sim,
        };
        assert_eq!(average_score(&[r(1.0)]).unwrap(), 1.0);
        assert_eq!(average_score(&vec![r(0.0); 10]).unwrap(), 0.0);
        assert!(average_score(&[]).is_err());
    }

    #[test]
    fn report_json_fields() {
        let rep = ScoreReport::new(zero_criteria(true), WeightPreset::Hardware);
        let v = serde_json::to_value(rep).unwrap();
        let obj = v.as_object().unwrap();
        let mut keys: Vec<_> = obj.keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "energy",
                "score",
                "success",
                "swingup_time",
                "torque_cost",
                "torque_smoothness",
                "velocity_cost",
                "weight_preset"
            ]
        );
        assert_eq!(obj["weight_preset"], "hardware");
        let back: ScoreReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, rep);
    }

    fn criteria_strategy() -> impl Strategy<Value = Criteria> {
        (
            0.0..20.0f64,
            0.0..100.0f64,
            0.0..500.0f64,
            0.0..5.0f64,
            0.0..5000.0f64,
        )
            .prop_map(|(t, e, tc, ts, v)| Criteria {
                success: true,
                swingup_time: t,
                energy: e,
                torque_cost: tc,
                torque_smoothness: ts,
                velocity_cost: v,
            })
    }

    proptest! {
        #[test]
        fn score_in_unit_interval(c in criteria_strategy(), hw: bool) {
            let w = if hw { WeightSet::HARDWARE } else { WeightSet::SIMULATION };
            let s = performance_score(&c, &w);
            prop_assert!((0.0..=1.0).contains(&s));
        }

        #[test]
        fn score_decreases_in_each_criterion(c in criteria_strategy(), idx in 0usize..5, bump in 1e-3..1.0f64) {
            let w = WeightSet::SIMULATION;
            let mut worse = c;
            match idx {
                0 => worse.swingup_time += bump,
                1 => worse.energy += bump,
                2 => worse.torque_cost += bump,
                3 => worse.torque_smoothness += bump * 1e-2,
                _ => worse.velocity_cost += bump,
            }
            let (a, b) = (performance_score(&c, &w), performance_score(&worse, &w));
            // Strict unless tanh has saturated in floating point.
            prop_assert!(b <= a);
            let arg = c.values()[idx] * w.values()[idx];
            if arg < 5.0 {
                prop_assert!(b < a);
            }
        }

        #[test]
        fn weight_scale_property(c in criteria_strategy(), k in 0.1..10.0f64) {
            let w = WeightSet::SIMULATION;
            let scaled = Criteria {
                swingup_time: c.swingup_time / k,
                energy: c.energy / k,
                torque_cost: c.torque_cost / k,
                torque_smoothness: c.torque_smoothness / k,
                velocity_cost: c.velocity_cost / k,
                ..c
            };
            let a = performance_score(&c, &w);
            let b = performance_score(&scaled, &w.scaled(k));
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn hardware_weights_are_lenient(c in criteria_strategy()) {
            prop_assume!(c.torque_cost > 0.0 && c.torque_smoothness > 0.0);
            let hw = performance_score(&c, &WeightSet::HARDWARE);
            let sim = performance_score(&c, &WeightSet::SIMULATION);
            prop_assert!(hw >= sim);
        }
    }
}
