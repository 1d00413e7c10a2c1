use rand::Rng;
use serde::{Deserialize, Serialize};

use super::progress::GenerationStats;
use crate::seed::{self, stream};
use crate::{par, Error, Result};

/// Settings for DE/rand/1/bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    /// Population size; `None` means `15 * dim`.
    pub population: Option<usize>,
    pub f: f64,
    pub cr: f64,
    /// Inclusive `(lower, upper)` per dimension.
    pub bounds: Vec<(f64, f64)>,
    pub max_generations: usize,
    /// Stop once `mean_cost - best_cost <= tolerance * |mean_cost|`.
    pub tolerance: f64,
    pub seed: u64,
}

impl DeConfig {
    pub fn new(bounds: Vec<(f64, f64)>, seed: u64) -> Self {
        Self {
            population: None,
            f: 0.7,
            cr: 0.9,
            bounds,
            max_generations: 1000,
            tolerance: 0.0,
            seed,
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn population_size(&self) -> usize {
        self.population.unwrap_or(15 * self.dim())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.bounds.is_empty() {
            return bad("DE needs at least one bounded dimension".into());
        }
        if let Some((i, _)) = self
            .bounds
            .iter()
            .enumerate()
            .find(|(_, (lo, hi))| !(lo.is_finite() && hi.is_finite() && lo <= hi))
        {
            return bad(format!("DE bound {i} is not a finite interval"));
        }
        if !(self.f > 0.0 && self.f < 2.0) {
            return bad(format!("DE weight F must lie in (0, 2), got {}", self.f));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return bad(format!(
                "DE crossover rate must lie in [0, 1], got {}",
                self.cr
            ));
        }
        if self.population_size() < 4 {
            return bad(format!(
                "DE population must be >= 4, got {}",
                self.population_size()
            ));
        }
        if !(self.tolerance >= 0.0) {
            return bad("DE tolerance must be >= 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeResult {
    pub best: Vec<f64>,
    pub best_cost: f64,
    pub history: Vec<GenerationStats>,
    pub evaluations: usize,
}

fn sanitize(c: f64) -> f64 {
    if c.is_nan() {
        f64::INFINITY
    } else {
        c
    }
}

fn stats(generation: u64, costs: &[f64]) -> GenerationStats {
    let best_cost = costs.iter().copied().fold(f64::INFINITY, f64::min);
    GenerationStats {
        generation,
        best_cost,
        mean_cost: costs.iter().sum::<f64>() / costs.len() as f64,
    }
}

/// Minimizes `cost` over the box in `cfg` with DE/rand/1/bin.
///
/// Trial vectors are clipped to the bounds and replace their target when
/// their cost is not worse. All draws for generation `g` come from a stream
/// keyed by `(seed, g)`, so a run depends only on the seed.
pub fn differential_evolution<F>(cost: F, cfg: &DeConfig) -> Result<DeResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let dim = cfg.dim();
    let np = cfg.population_size();

    let mut rng = seed::rng(cfg.seed, &[stream::DE, 0]);
    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| {
            cfg.bounds
                .iter()
                .map(|&(lo, hi)| {
                    if hi > lo {
                        rng.random_range(lo..=hi)
                    } else {
                        lo
                    }
                })
                .collect()
        })
        .collect();
    let mut costs = par::map_slice(&pop, |x| sanitize(cost(x)));
    let mut evaluations = np;
    let mut history = vec![stats(0, &costs)];

    for g in 1..=cfg.max_generations as u64 {
        let last = history.last().expect("history starts non-empty");
        if last.best_cost.is_finite()
            && last.mean_cost - last.best_cost <= cfg.tolerance * last.mean_cost.abs()
        {
            break;
        }

        let mut rng = seed::rng(cfg.seed, &[stream::DE, g]);
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let mut pick = || loop {
                    let k = rng.random_range(0..np);
                    if k != i {
                        break k;
                    }
                };
                let a = pick();
                let b = loop {
                    let k = pick();
                    if k != a {
                        break k;
                    }
                };
                let c = loop {
                    let k = pick();
                    if k != a && k != b {
                        break k;
                    }
                };
                let forced = rng.random_range(0..dim);
                (0..dim)
                    .map(|j| {
                        let (lo, hi) = cfg.bounds[j];
                        if j == forced || rng.random::<f64>() < cfg.cr {
                            let v = pop[a][j] + cfg.f * (pop[b][j] - pop[c][j]);
                            v.clamp(lo, hi)
                        } else {
                            pop[i][j]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_costs = par::map_slice(&trials, |x| sanitize(cost(x)));
        evaluations += np;

        for (i, (trial, tc)) in trials.into_iter().zip(trial_costs).enumerate() {
            if tc <= costs[i] {
                pop[i] = trial;
                costs[i] = tc;
            }
        }
        history.push(stats(g, &costs));
    }

    let best = (0..np)
        .min_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)))
        .expect("population is non-empty");
    Ok(DeResult {
        best: pop[best].clone(),
        best_cost: costs[best],
        history,
        evaluations,
    })
}
