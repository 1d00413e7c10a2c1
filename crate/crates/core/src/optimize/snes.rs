use std::cmp::Ordering;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::progress::GenerationStats;
use crate::seed::{self, stream};
use crate::{par, Error, Result};

/// Search distribution of a separable natural evolution strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnesState {
    pub mean: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Learning rate of the shared log-normal step-size factor.
    pub tau_global: f64,
    /// Learning rate of the per-coordinate step sizes.
    pub tau_local: f64,
    /// Learning rate of the mean.
    pub lr_mean: f64,
    pub population: usize,
    pub generation: u64,
    pub seed: u64,
}

impl SnesState {
    /// Default settings for `mean.len()` dimensions: population
    /// `4 + floor(3 ln n)`, `tau_local = (3 + ln n) / (10 sqrt n)`, no
    /// global step-size noise.
    pub fn new(mean: Vec<f64>, sigma0: f64, seed: u64) -> Result<Self> {
        let n = mean.len();
        if n == 0 {
            return Err(Error::InvalidArgument(
                "SNES needs at least one dimension".into(),
            ));
        }
        let nf = n as f64;
        let state = Self {
            sigma: vec![sigma0; n],
            mean,
            tau_global: 0.0,
            tau_local: (3.0 + nf.ln()) / (5.0 * nf.sqrt()) * 0.5,
            lr_mean: 1.0,
            population: (4 + (3.0 * nf.ln()).floor() as usize).max(4),
            generation: 0,
            seed,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn with_population(mut self, population: usize) -> Result<Self> {
        self.population = population;
        self.validate()?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::InvalidArgument(format!(
                "SNES population must be >= 4, got {}",
                self.population
            )));
        }
        if self.sigma.len() != self.mean.len() || self.sigma.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidArgument("SNES step sizes must be > 0".into()));
        }
        Ok(())
    }
}

/// Rank-based utilities for a population of `lambda`, best rank first.
/// They sum to zero.
pub fn snes_utilities(lambda: usize) -> Vec<f64> {
    let top = (lambda as f64 / 2.0 + 1.0).ln();
    let raw: Vec<f64> = (1..=lambda)
        .map(|k| (top - (k as f64).ln()).max(0.0))
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter()
        .map(|r| r / total - 1.0 / lambda as f64)
        .collect()
}

/// Source of the standard normal draws used in one generation.
pub trait GaussianSource: Sync {
    /// The shared draw multiplying `tau_global`.
    fn global(&self, state: &SnesState) -> f64;
    /// The `dim`-vector perturbing candidate `index`.
    fn candidate(&self, state: &SnesState, index: usize) -> Vec<f64>;
}

/// Draws from streams keyed by (seed, generation, candidate index).
#[derive(Debug, Clone, Copy, Default)]
pub struct SeededGaussian;

impl GaussianSource for SeededGaussian {
    fn global(&self, state: &SnesState) -> f64 {
        let mut rng = seed::rng(state.seed, &[stream::SNES, state.generation, u64::MAX]);
        StandardNormal.sample(&mut rng)
    }

    fn candidate(&self, state: &SnesState, index: usize) -> Vec<f64> {
        let mut rng = seed::rng(state.seed, &[stream::SNES, state.generation, index as u64]);
        (0..state.dim())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect()
    }
}

/// All draws are zero; the distribution must stay put.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroGaussian;

impl GaussianSource for ZeroGaussian {
    fn global(&self, _: &SnesState) -> f64 {
        0.0
    }

    fn candidate(&self, state: &SnesState, _: usize) -> Vec<f64> {
        vec![0.0; state.dim()]
    }
}

/// Outcome of one generation.
#[derive(Debug, Clone, PartialEq)]
pub struct SnesGeneration {
    pub best: Vec<f64>,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub evaluations: usize,
}

pub fn snes_step<F>(state: &SnesState, fitness: &F) -> Result<(SnesState, SnesGeneration)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    snes_step_with(state, fitness, &SeededGaussian)
}

/// One generation: sample `population` candidates `mean + sigma * s_k`,
/// rank them by fitness (higher is better, non-finite ranks last), and move
/// the mean and log step sizes along the utility-weighted natural gradient.
pub fn snes_step_with<F, G>(
    state: &SnesState,
    fitness: &F,
    draws: &G,
) -> Result<(SnesState, SnesGeneration)>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: GaussianSource + ?Sized,
{
    state.validate()?;
    let n = state.dim();
    let lambda = state.population;

    let samples: Vec<Vec<f64>> = (0..lambda).map(|k| draws.candidate(state, k)).collect();
    let candidates: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            (0..n)
                .map(|i| state.mean[i] + state.sigma[i] * s[i])
                .collect()
        })
        .collect();
    let scores = par::map_slice(&candidates, |c| {
        let f = fitness(c);
        if f.is_finite() {
            f
        } else {
            f64::NEG_INFINITY
        }
    });

    let mut order: Vec<usize> = (0..lambda).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let utilities = snes_utilities(lambda);

    let mut grad_mean = vec![0.0; n];
    let mut grad_sigma = vec![0.0; n];
    for (u, &k) in utilities.iter().zip(&order) {
        let s = &samples[k];
        for i in 0..n {
            grad_mean[i] += u * s[i];
            grad_sigma[i] += u * (s[i] * s[i] - 1.0);
        }
    }

    let shared = state.tau_global * draws.global(state);
    let mut next = state.clone();
    for i in 0..n {
        next.mean[i] = state.mean[i] + state.lr_mean * state.sigma[i] * grad_mean[i];
        next.sigma[i] = state.sigma[i] * (shared + state.tau_local * grad_sigma[i]).exp();
        // exp underflow would stall the search for good
        if !(next.sigma[i] > 0.0) {
            next.sigma[i] = f64::MIN_POSITIVE;
        }
    }
    next.generation += 1;

    let best = order[0];
    let finite: Vec<f64> = scores.iter().copied().filter(|f| f.is_finite()).collect();
    let mean_fitness = if finite.is_empty() {
        f64::NEG_INFINITY
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    Ok((
        next,
        SnesGeneration {
            best: candidates[best].clone(),
            best_fitness: scores[best],
            mean_fitness,
            evaluations: lambda,
        },
    ))
}

/// Result of a multi-generation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SnesRun {
    pub state: SnesState,
    pub best: Vec<f64>,
    pub best_fitness: f64,
    pub evaluations: usize,
    pub history: Vec<GenerationStats>,
}

/// Iterates generations until `generations` have run or the best fitness
/// reaches `target`. The returned best is the best candidate ever seen
/// (the initial mean counts when `generations` is zero).
pub fn snes_run<F>(
    mut state: SnesState,
    fitness: &F,
    generations: usize,
    target: Option<f64>,
) -> Result<SnesRun>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut best = state.mean.clone();
    let mut best_fitness = f64::NEG_INFINITY;
    let mut evaluations = 0;
    let mut history = Vec::with_capacity(generations);
    for _ in 0..generations {
        let (next, generation) = snes_step(&state, fitness)?;
        evaluations += generation.evaluations;
        history.push(GenerationStats {
            generation: state.generation,
            best_cost: -generation.best_fitness,
            mean_cost: -generation.mean_fitness,
        });
        if generation.best_fitness > best_fitness {
            best_fitness = generation.best_fitness;
            best = generation.best;
        }
        state = next;
        if target.is_some_and(|t| best_fitness >= t) {
            break;
        }
    }
    Ok(SnesRun {
        state,
        best,
        best_fitness,
        evaluations,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sphere(x: &[f64]) -> f64 {
        -x.iter().map(|v| v * v).sum::<f64>()
    }

    #[test]
    fn utilities_sum_to_zero_and_decrease() {
        for lambda in 4..40 {
            let u = snes_utilities(lambda);
            assert!(u.iter().sum::<f64>().abs() < 1e-12);
            assert!(u.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn zero_draws_leave_distribution_unchanged() {
        let s = SnesState::new(vec![1.0, -2.0, 3.0], 0.7, 1).unwrap();
        let (next, _) = snes_step_with(&s, &sphere, &ZeroGaussian).unwrap();
        assert_eq!(next.mean, s.mean);
        assert_eq!(next.sigma, s.sigma);
        assert_eq!(next.generation, 1);
    }

    #[test]
    fn defaults() {
        let s = SnesState::new(vec![0.0; 20], 1.0, 0).unwrap();
        assert_eq!(s.population, 12);
        let expected = (3.0 + 20f64.ln()) / (5.0 * 20f64.sqrt()) / 2.0;
        assert!((s.tau_local - expected).abs() < 1e-15);
        assert_eq!(s.tau_global, 0.0);
        assert!(SnesState::new(vec![0.0; 2], 0.0, 0).is_err());
        assert!(SnesState::new(vec![0.0; 2], 1.0, 0)
            .unwrap()
            .with_population(3)
            .is_err());
    }

    #[test]
    fn non_finite_fitness_ranks_last() {
        let s = SnesState::new(vec![0.0; 4], 1.0, 5).unwrap();
        let f = |x: &[f64]| if x[0] > 0.0 { f64::NAN } else { sphere(x) };
        let (_, g) = snes_step(&s, &f).unwrap();
        assert!(g.best_fitness.is_finite());
        assert!(g.best[0] <= 0.0);
    }

    #[test]
    fn sphere_twenty_dims() {
        let s = SnesState::new(vec![1.0; 20], 1.0, 0).unwrap();
        let run = snes_run(s, &sphere, 10_000 / 12, Some(-1e-6)).unwrap();
        assert!(run.best_fitness > -1e-6);
        assert!(run.evaluations <= 10_000);
    }

    #[test]
    fn reproducible() {
        let s = SnesState::new(vec![1.0; 6], 0.5, 77).unwrap();
        let a = snes_run(s.clone(), &sphere, 30, None).unwrap();
        let b = snes_run(s, &sphere, 30, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_generations_returns_initial_mean() {
        let s = SnesState::new(vec![0.25; 3], 0.5, 1).unwrap();
        let run = snes_run(s.clone(), &sphere, 0, None).unwrap();
        assert_eq!(run.best, s.mean);
        assert_eq!(run.evaluations, 0);
    }

    proptest! {
        #[test]
        fn shift_invariance(seed in 0u64..500, shift in -100.0..100.0f64) {
            let s = SnesState::new(vec![0.5; 5], 0.3, seed).unwrap();
            let shifted = |x: &[f64]| sphere(x) + shift;
            let (a, _) = snes_step(&s, &sphere).unwrap();
            let (b, _) = snes_step(&s, &shifted).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn sigma_stays_positive(seed in 0u64..100) {
            let mut s = SnesState::new(vec![3.0; 4], 1.0, seed).unwrap();
            s.tau_global = 0.5;
            for _ in 0..50 {
                s = snes_step(&s, &sphere).unwrap().0;
                prop_assert!(s.sigma.iter().all(|v| *v > 0.0));
            }
        }
    }
}
