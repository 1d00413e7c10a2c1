use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::{Error, Result};

/// One Gaussian torque bump `A * exp(-(t - t0)^2 / (2 sigma_t^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub t0: f64,
    pub amplitude: f64,
    pub sigma_t: f64,
    pub joint: usize,
}

/// Seeded sequence of Gaussian torque bumps acting on both joints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationProfile {
    pub bumps: Vec<Bump>,
    pub seed: u64,
}

impl PerturbationProfile {
    pub fn torque_at(&self, t: f64) -> [f64; 2] {
        let mut out = [0.0; 2];
        for b in &self.bumps {
            let z = (t - b.t0) / b.sigma_t;
            out[b.joint] += b.amplitude * (-0.5 * z * z).exp();
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.bumps.iter().all(|b| b.amplitude == 0.0)
    }
}

/// Distribution the profile generator samples from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationConfig {
    pub count_min: usize,
    pub count_max: usize,
    /// Bump magnitudes are uniform in `[amplitude_min, amplitude_max]` with a
    /// random sign (N·m).
    pub amplitude_min: f64,
    pub amplitude_max: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            count_min: 3,
            count_max: 3,
            amplitude_min: 0.5,
            amplitude_max: 5.0,
            sigma_min: 0.05,
            sigma_max: 0.2,
        }
    }
}

impl PerturbationConfig {
    /// A distribution whose profiles are identically zero.
    pub fn silent() -> Self {
        Self {
            amplitude_min: 0.0,
            amplitude_max: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.count_min <= self.count_max
            && self.amplitude_min >= 0.0
            && self.amplitude_min <= self.amplitude_max
            && self.sigma_min > 0.0
            && self.sigma_min <= self.sigma_max
            && self.amplitude_max.is_finite()
            && self.sigma_max.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid perturbation config {self:?}"
            )))
        }
    }
}

/// Draws a profile: bump times uniform over the trial, magnitudes uniform
/// in the configured range with random sign, joint chosen uniformly.
pub fn generate_perturbation_profile(
    seed: u64,
    trial_length: f64,
    cfg: &PerturbationConfig,
) -> Result<PerturbationProfile> {
    cfg.validate()?;
    if !(trial_length > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "trial length must be > 0, got {trial_length}"
        )));
    }
    let mut rng = seed::rng(seed, &[]);
    let count = rng.random_range(cfg.count_min..=cfg.count_max);
    let bumps = (0..count)
        .map(|_| {
            let t0 = rng.random_range(0.0..trial_length);
            let magnitude = rng.random_range(cfg.amplitude_min..=cfg.amplitude_max);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let sigma_t = rng.random_range(cfg.sigma_min..=cfg.sigma_max);
            let joint = rng.random_range(0..2usize);
            Bump {
                t0,
                amplitude: sign * magnitude,
                sigma_t,
                joint,
            }
        })
        .collect();
    Ok(PerturbationProfile { bumps, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_in_seed() {
        let cfg = PerturbationConfig::default();
        let a = generate_perturbation_profile(9, 10.0, &cfg).unwrap();
        assert_eq!(a, generate_perturbation_profile(9, 10.0, &cfg).unwrap());
        assert_ne!(a, generate_perturbation_profile(10, 10.0, &cfg).unwrap());
        assert_eq!(a.bumps.len(), 3);
        for b in &a.bumps {
            assert!((0.0..10.0).contains(&b.t0));
            assert!((0.5..=5.0).contains(&b.amplitude.abs()));
            assert!((0.05..=0.2).contains(&b.sigma_t));
            assert!(b.joint < 2);
        }
    }

    #[test]
    fn zero_amplitude_is_silent() {
        let p = generate_perturbation_profile(1, 10.0, &PerturbationConfig::silent()).unwrap();
        assert!(p.is_zero());
        for k in 0..1000 {
            assert_eq!(p.torque_at(k as f64 * 0.01), [0.0, 0.0]);
        }
    }

    #[test]
    fn peak_is_bounded_by_bump_sum() {
        let cfg = PerturbationConfig::default();
        for seed in 0..200 {
            let p = generate_perturbation_profile(seed, 10.0, &cfg).unwrap();
            let peak = (0..=10_000)
                .map(|k| p.torque_at(k as f64 * 1e-3))
                .flat_map(|t| t.map(f64::abs))
                .fold(0.0, f64::max);
            assert!(peak <= 3.0 * 5.0, "seed {seed}: {peak}");
        }
    }

    #[test]
    fn single_bump_shape() {
        let p = PerturbationProfile {
            bumps: vec![Bump {
                t0: 1.0,
                amplitude: 2.0,
                sigma_t: 0.1,
                joint: 1,
            }],
            seed: 0,
        };
        assert_eq!(p.torque_at(1.0), [0.0, 2.0]);
        let one_sigma = p.torque_at(1.1)[1];
        assert!((one_sigma - 2.0 * (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_config() {
        let bad = PerturbationConfig {
            sigma_min: 0.0,
            ..Default::default()
        };
        assert!(generate_perturbation_profile(0, 10.0, &bad).is_err());
        let bad = PerturbationConfig {
            count_min: 4,
            count_max: 2,
            ..Default::default()
        };
        assert!(generate_perturbation_profile(0, 10.0, &bad).is_err());
    }
}
