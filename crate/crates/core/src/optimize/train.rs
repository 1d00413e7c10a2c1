use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::progress::GenerationStats;
use super::snes::{snes_step, SnesState};
use crate::controllers::{
    reward_evolsac, reward_history_sac, PolicyController, PolicyParams, RewardConfig,
};
use crate::dynamics::{end_effector_height, rollout, ImperfectionConfig, TrialSpec};
use crate::robustness::{generate_perturbation_profile, PerturbationConfig};
use crate::scoring::{compute_criteria, performance_score, WeightPreset, DEFAULT_THRESHOLD};
use crate::seed::{self, stream};
use crate::{Error, ModelParams, Result, RobotKind, Trajectory};

/// What a training episode is judged by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Performance score of successful episodes. Failed episodes, which all
    /// score 0, are ranked below every success by their time-averaged
    /// end-effector height, mapped into `[-1, 0)`.
    #[default]
    Score,
    /// Mean per-step two-branch surrogate reward.
    EvolSac,
    /// Mean per-step history-policy reward.
    HistorySac,
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "score" => Ok(Objective::Score),
            "evolsac" | "evol_sac" => Ok(Objective::EvolSac),
            "historysac" | "history_sac" => Ok(Objective::HistorySac),
            _ => Err(Error::InvalidArgument(format!("unknown objective `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub generations: usize,
    pub population: usize,
    pub sigma0: f64,
    /// Standard deviation of the random initial weights.
    pub init_scale: f64,
    pub hidden: Vec<usize>,
    pub history_window: usize,
    pub t_final: f64,
    pub objective: Objective,
    pub weights: WeightPreset,
    pub threshold: f64,
    /// Average every fitness over disturbed particles instead of one
    /// nominal rollout.
    pub robust: bool,
    pub particles: usize,
    pub disturbance: PerturbationConfig,
    pub rewards: Option<RewardConfig>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            generations: 200,
            population: 16,
            sigma0: 0.5,
            init_scale: 0.1,
            hidden: vec![8],
            history_window: 0,
            t_final: crate::dynamics::DEFAULT_T_FINAL,
            objective: Objective::Score,
            weights: WeightPreset::Sim,
            threshold: DEFAULT_THRESHOLD,
            robust: false,
            particles: 4,
            disturbance: PerturbationConfig::default(),
            rewards: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub policy: PolicyParams,
    pub best_fitness: f64,
    pub evaluations: usize,
    pub history: Vec<GenerationStats>,
    pub state: SnesState,
}

/// Fitness of one finished episode under `objective` (higher is better).
pub fn episode_fitness(
    traj: &Trajectory,
    kind: RobotKind,
    p: &ModelParams,
    objective: Objective,
    cfg: &TrainConfig,
) -> Result<f64> {
    if traj.diverged {
        return Ok(f64::NEG_INFINITY);
    }
    let n = traj.len();
    if n < 2 {
        return Err(Error::TrajectoryTooShort { len: n, min: 2 });
    }
    let rewards = cfg.rewards.unwrap_or_else(|| RewardConfig::for_robot(kind));
    let active = kind.active_joint();
    let limit = p.tau_limits()[active];
    let norm = |tau: [f64; 2]| {
        if limit > 0.0 {
            tau[active] / limit
        } else {
            0.0
        }
    };

    match objective {
        Objective::Score => {
            let c = compute_criteria(traj, p, cfg.threshold)?;
            if c.success {
                return Ok(performance_score(&c, &cfg.weights.weights()));
            }
            let reach = p.l1 + p.l2;
            let mean_height = traj
                .states
                .iter()
                .map(|s| end_effector_height(p, s))
                .sum::<f64>()
                / n as f64;
            Ok(0.5 * (mean_height / reach - 1.0).min(-f64::EPSILON))
        }
        Objective::EvolSac => {
            let mut total = 0.0;
            for k in 0..n - 1 {
                let a = norm(traj.tau[k]);
                let a_prev = if k == 0 { 0.0 } else { norm(traj.tau[k - 1]) };
                total += reward_evolsac(
                    p,
                    &traj.states[k],
                    a,
                    a - a_prev,
                    traj.time[k],
                    &rewards.evolsac,
                );
            }
            Ok(total / (n - 1) as f64)
        }
        Objective::HistorySac => {
            let mut total = 0.0;
            for k in 0..n - 1 {
                let a = norm(traj.tau[k]);
                let a_prev = if k == 0 { 0.0 } else { norm(traj.tau[k - 1]) };
                total +=
                    reward_history_sac(&traj.states[k], a, a_prev, traj.dt, rewards.history_sac)?;
            }
            Ok(total / (n - 1) as f64)
        }
    }
}

/// Closed-loop rollouts of `policy`, one per particle. Particle `m` suffers
/// a perturbation profile drawn from `disturbance` with a seed derived from
/// `(seed, m)`; all particles start at `spec.x0`.
pub fn rollout_with_disturbances(
    policy: &PolicyParams,
    spec: &TrialSpec,
    p: &ModelParams,
    particles: usize,
    disturbance: &PerturbationConfig,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    if particles == 0 {
        return Err(Error::InvalidArgument("particle count must be >= 1".into()));
    }
    (0..particles as u64)
        .map(|m| {
            let profile = generate_perturbation_profile(
                seed::derive(seed, &[stream::PARTICLE, m]),
                spec.t_final,
                disturbance,
            )?;
            let imp = ImperfectionConfig::default().with_perturbation(profile);
            let mut c = PolicyController::new(policy.clone(), p.tau_limits());
            rollout(&mut c, spec, p, &imp)
        })
        .collect()
}

fn candidate_fitness(
    policy: &PolicyParams,
    spec: &TrialSpec,
    p: &ModelParams,
    cfg: &TrainConfig,
    generation: u64,
) -> Result<f64> {
    let trajs = if cfg.robust {
        let seed = seed::derive(cfg.seed, &[stream::PARTICLE, generation]);
        rollout_with_disturbances(policy, spec, p, cfg.particles, &cfg.disturbance, seed)?
    } else {
        let mut c = PolicyController::new(policy.clone(), p.tau_limits());
        vec![rollout(&mut c, spec, p, &ImperfectionConfig::default())?]
    };
    let mut total = 0.0;
    for t in &trajs {
        total += episode_fitness(t, spec.kind, p, cfg.objective, cfg)?;
    }
    Ok(total / trajs.len() as f64)
}

/// Searches the weights of a policy network with SNES.
///
/// All candidates of a generation face the same disturbance particles. The
/// returned policy is the best candidate seen over the whole run, or the
/// initial weights if no generation ran.
pub fn snes_train_policy(
    kind: RobotKind,
    p: &ModelParams,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    p.validate()?;
    cfg.disturbance.validate()?;
    if cfg.robust && cfg.particles == 0 {
        return Err(Error::InvalidArgument(
            "robust training needs particles >= 1".into(),
        ));
    }
    let template = PolicyParams::zeros(&cfg.hidden, cfg.history_window)?;
    let init = Normal::new(0.0, cfg.init_scale)
        .map_err(|e| Error::InvalidArgument(format!("init scale: {e}")))?;
    let mut rng = seed::rng(cfg.seed, &[stream::POLICY_INIT]);
    let theta0: Vec<f64> = (0..template.params().len())
        .map(|_| init.sample(&mut rng))
        .collect();

    let spec = TrialSpec::new(kind).with_t_final(cfg.t_final);
    let mut state =
        SnesState::new(theta0, cfg.sigma0, cfg.seed)?.with_population(cfg.population)?;
    let mut best = template.with_params(state.mean.clone())?;
    let mut best_fitness = f64::NEG_INFINITY;
    let mut evaluations = 0;
    let mut history = Vec::with_capacity(cfg.generations);

    for _ in 0..cfg.generations {
        let generation = state.generation;
        let fitness = |theta: &[f64]| {
            template
                .with_params(theta.to_vec())
                .and_then(|pol| candidate_fitness(&pol, &spec, p, cfg, generation))
                .unwrap_or(f64::NEG_INFINITY)
        };
        let (next, gen) = snes_step(&state, &fitness)?;
        evaluations += gen.evaluations;
        history.push(GenerationStats {
            generation,
            best_cost: -gen.best_fitness,
            mean_cost: -gen.mean_fitness,
        });
        if gen.best_fitness > best_fitness {
            best_fitness = gen.best_fitness;
            best = template.with_params(gen.best)?;
        }
        state = next;
    }

    Ok(TrainOutcome {
        policy: best,
        best_fitness,
        evaluations,
        history,
        state,
    })
}
