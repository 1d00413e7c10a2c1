use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::de::{differential_evolution, DeConfig};
use super::progress::GenerationStats;
use crate::controllers::Controller;
use crate::dynamics::{self, ImperfectionConfig, ParamField, TrialSpec};
use crate::seed::{self, stream};
use crate::{Error, ModelParams, Result, RobotKind, State, Trajectory};

/// Default matching horizon in seconds.
pub const DEFAULT_TRIM: f64 = 1.5;

/// One recorded experiment: the torque that acted on the plant at each
/// sample and the measured states, starting from `states[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SysIdRecording {
    pub torque: Vec<[f64; 2]>,
    pub states: Vec<State>,
}

impl SysIdRecording {
    pub fn new(torque: Vec<[f64; 2]>, states: Vec<State>) -> Result<Self> {
        if torque.len() != states.len() {
            return Err(Error::InvalidArgument(format!(
                "recording has {} torque samples but {} states",
                torque.len(),
                states.len()
            )));
        }
        if states.is_empty() {
            return Err(Error::TrajectoryTooShort { len: 0, min: 2 });
        }
        Ok(Self { torque, states })
    }

    /// Uses the applied motor torque plus any logged perturbation.
    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        let torque = (0..traj.len()).map(|k| traj.plant_torque(k)).collect();
        Self::new(torque, traj.states.clone())
    }

    pub fn x0(&self) -> State {
        self.states[0]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Recordings sharing one sample period, matched over the first `trim`
/// seconds each.
#[derive(Debug, Clone, PartialEq)]
pub struct SysIdDataset {
    pub recordings: Vec<SysIdRecording>,
    pub dt: f64,
    pub trim: f64,
}

impl SysIdDataset {
    pub fn new(recordings: Vec<SysIdRecording>, dt: f64, trim: f64) -> Result<Self> {
        let data = Self {
            recordings,
            dt,
            trim,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn from_trajectories(trajs: &[Trajectory], trim: f64) -> Result<Self> {
        let dt = trajs
            .first()
            .map(|t| t.dt)
            .ok_or_else(|| Error::InvalidArgument("no trajectories given".into()))?;
        if let Some(t) = trajs.iter().find(|t| (t.dt - dt).abs() > 1e-12 * dt) {
            return Err(Error::InvalidArgument(format!(
                "mixed sample periods {dt} and {}",
                t.dt
            )));
        }
        let recordings = trajs
            .iter()
            .map(SysIdRecording::from_trajectory)
            .collect::<Result<_>>()?;
        Self::new(recordings, dt, trim)
    }

    /// Loads every `*.csv` in `dir`, in file-name order.
    pub fn load_dir(dir: &Path, trim: f64) -> Result<Self> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        paths.sort();
        let trajs = paths
            .iter()
            .map(|p| Trajectory::load(p))
            .collect::<Result<Vec<_>>>()?;
        Self::from_trajectories(&trajs, trim)
    }

    /// Number of samples inside the trim window.
    pub fn horizon(&self) -> usize {
        (self.trim / self.dt + 1e-9).floor() as usize + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.recordings.is_empty() {
            return Err(Error::InvalidArgument("dataset has no recordings".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "dt must be > 0, got {}",
                self.dt
            )));
        }
        if !(self.trim > 0.0 && self.trim.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "trim must be > 0, got {}",
                self.trim
            )));
        }
        let need = self.horizon();
        if need < 2 {
            return Err(Error::TrajectoryTooShort { len: need, min: 2 });
        }
        for r in &self.recordings {
            if r.torque.len() != r.states.len() {
                return Err(Error::InvalidArgument(
                    "torque and state lengths differ".into(),
                ));
            }
            if r.len() < need {
                return Err(Error::TrajectoryTooShort {
                    len: r.len(),
                    min: need,
                });
            }
        }
        Ok(())
    }
}

/// Weighted squared error between two equally long state sequences. Sample
/// `t` (1-based) of `T` carries weight `1 - 0.5 (t - 1) / (T - 1)`.
pub fn trajectory_match_cost(sim: &[State], real: &[State]) -> Result<f64> {
    if sim.len() != real.len() {
        return Err(Error::InvalidArgument(format!(
            "sequences differ in length: {} vs {}",
            sim.len(),
            real.len()
        )));
    }
    let t_len = sim.len();
    if t_len < 2 {
        return Err(Error::TrajectoryTooShort { len: t_len, min: 2 });
    }
    let span = (t_len - 1) as f64;
    let total = sim
        .iter()
        .zip(real)
        .enumerate()
        .map(|(i, (a, b))| {
            let w = 1.0 - 0.5 * i as f64 / span;
            let (a, b) = (a.to_array(), b.to_array());
            w * (0..4).map(|j| (a[j] - b[j]).powi(2)).sum::<f64>()
        })
        .sum();
    Ok(total)
}

/// Integrates `samples` states from `x0`, holding `torque[k]` over step `k`.
pub fn replay(
    p: &ModelParams,
    x0: State,
    torque: &[[f64; 2]],
    dt: f64,
    samples: usize,
) -> Result<Vec<State>> {
    if samples > torque.len() + 1 {
        return Err(Error::InvalidArgument(format!(
            "{samples} samples need {} torque values, got {}",
            samples - 1,
            torque.len()
        )));
    }
    let mut out = Vec::with_capacity(samples);
    if samples == 0 {
        return Ok(out);
    }
    out.push(x0);
    for tau in &torque[..samples - 1] {
        let next = dynamics::step(p, out.last().unwrap(), *tau, dt)?;
        out.push(next);
    }
    Ok(out)
}

/// Matching cost of `p` over the whole dataset. A replay that diverges costs
/// `+inf`.
pub fn sysid_cost(p: &ModelParams, data: &SysIdDataset) -> Result<f64> {
    data.validate()?;
    p.validate()?;
    let t_len = data.horizon();
    let mut total = 0.0;
    for r in &data.recordings {
        let sim = match replay(p, r.x0(), &r.torque, data.dt, t_len) {
            Ok(sim) => sim,
            Err(Error::Diverged(_)) => return Ok(f64::INFINITY),
            Err(e) => return Err(e),
        };
        total += trajectory_match_cost(&sim, &r.states[..t_len])?;
    }
    Ok(total)
}

/// How dependent quantities follow the free parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    /// Free parameters are set and nothing else changes.
    None,
    /// A link keeps its shape: the center-of-mass distance scales with the
    /// link length, and the inertia about the joint is the fixed inertia
    /// about the center of mass plus `m r^2`. Applies to `r` and `I` of each
    /// link unless those are free themselves.
    #[default]
    Geometric,
}

/// Maps an optimizer vector onto model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameterization {
    pub base: ModelParams,
    pub free: Vec<ParamField>,
    pub coupling: Coupling,
}

impl Parameterization {
    /// Masses and lengths free, geometric coupling.
    pub fn new(base: ModelParams) -> Self {
        Self {
            base,
            free: vec![
                ParamField::M1,
                ParamField::M2,
                ParamField::L1,
                ParamField::L2,
            ],
            coupling: Coupling::Geometric,
        }
    }

    pub fn with_free(mut self, free: Vec<ParamField>) -> Self {
        self.free = free;
        self
    }

    pub fn with_coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }

    pub fn initial(&self) -> Vec<f64> {
        self.free.iter().map(|f| f.get(&self.base)).collect()
    }

    /// Box of `base * (1 - rel) ..= base * (1 + rel)` per free field.
    pub fn relative_bounds(&self, rel: f64) -> Vec<(f64, f64)> {
        self.initial()
            .into_iter()
            .map(|v| {
                let (a, b) = (v * (1.0 - rel), v * (1.0 + rel));
                (a.min(b), a.max(b))
            })
            .collect()
    }

    pub fn apply(&self, x: &[f64]) -> Result<ModelParams> {
        if x.len() != self.free.len() {
            return Err(Error::FeatureLength {
                expected: self.free.len(),
                got: x.len(),
            });
        }
        let mut p = self.base;
        for (f, v) in self.free.iter().zip(x) {
            f.set(&mut p, *v);
        }
        if self.coupling == Coupling::Geometric {
            let b = &self.base;
            let fixed = |f: ParamField| self.free.contains(&f);
            if !fixed(ParamField::R1) {
                p.r1 = b.r1 * (p.l1 / b.l1);
            }
            if !fixed(ParamField::I1) {
                p.i1 = b.i1 + (p.m1 * p.r1 * p.r1 - b.m1 * b.r1 * b.r1);
            }
            if !fixed(ParamField::R2) {
                p.r2 = b.r2 * (p.l2 / b.l2);
            }
            if !fixed(ParamField::I2) {
                p.i2 = b.i2 + (p.m2 * p.r2 * p.r2 - b.m2 * b.r2 * b.r2);
            }
        }
        Ok(p)
    }

    pub fn cost(&self, x: &[f64], data: &SysIdDataset) -> f64 {
        self.apply(x)
            .and_then(|p| sysid_cost(&p, data))
            .unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SysIdSolution {
    pub params: ModelParams,
    pub vector: Vec<f64>,
    pub cost: f64,
    pub seed: u64,
    pub evaluations: usize,
    pub history: Vec<GenerationStats>,
}

impl SysIdSolution {
    /// Writes the identified parameters as a JSON object keyed by field name.
    pub fn save_params(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.params)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// One DE run over the bounds in `cfg` (one interval per free field).
pub fn identify(
    data: &SysIdDataset,
    param: &Parameterization,
    cfg: &DeConfig,
) -> Result<SysIdSolution> {
    data.validate()?;
    if cfg.bounds.len() != param.dim() {
        return Err(Error::FeatureLength {
            expected: param.dim(),
            got: cfg.bounds.len(),
        });
    }
    let res = differential_evolution(|x| param.cost(x, data), cfg)?;
    Ok(SysIdSolution {
        params: param.apply(&res.best)?,
        vector: res.best,
        cost: res.best_cost,
        seed: cfg.seed,
        evaluations: res.evaluations,
        history: res.history,
    })
}

/// `k` independent runs with seeds derived from `cfg.seed`, best first.
pub fn sysid_multi(
    data: &SysIdDataset,
    param: &Parameterization,
    cfg: &DeConfig,
    k: usize,
) -> Result<Vec<SysIdSolution>> {
    if k == 0 {
        return Err(Error::InvalidArgument("solution count must be >= 1".into()));
    }
    let mut out = (0..k as u64)
        .map(|i| {
            let mut run = cfg.clone();
            run.seed = seed::derive(cfg.seed, &[stream::SYSID_RUN, i]);
            identify(data, param, &run)
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    Ok(out)
}

/// Multisine torque on the active joint.
struct Excitation {
    kind: RobotKind,
    tones: Vec<(f64, f64, f64)>,
}

impl Controller for Excitation {
    fn reset(&mut self) {}

    fn get_control(&mut self, _: &State, t: f64) -> [f64; 2] {
        let u: f64 = self
            .tones
            .iter()
            .map(|(a, w, phase)| a * (w * t + phase).sin())
            .sum();
        let mut out = [0.0; 2];
        out[self.kind.active_joint()] = u;
        out
    }
}

/// Noise-free recordings of `p` driven by random multisine torques from
/// random initial states near the hanging rest.
pub fn synthetic_dataset(
    kind: RobotKind,
    p: &ModelParams,
    count: usize,
    trim: f64,
    seed: u64,
) -> Result<SysIdDataset> {
    let mut trajs = Vec::with_capacity(count);
    for i in 0..count as u64 {
        let mut rng = seed::rng(seed, &[stream::SYSID_RUN, u64::MAX, i]);
        let tones = (0..3)
            .map(|_| {
                (
                    rng.random_range(0.3..1.0),
                    rng.random_range(2.0..15.0),
                    rng.random_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        let mut spec = TrialSpec::new(kind).with_t_final(trim);
        spec.x0 = State::new(
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let mut c = Excitation { kind, tones };
        trajs.push(dynamics::rollout(
            &mut c,
            &spec,
            p,
            &ImperfectionConfig::default(),
        )?);
    }
    SysIdDataset::from_trajectories(&trajs, trim)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_case_two_samples() {
        let real = [State::HANGING, State::HANGING];
        let sim = [
            State::new(1.0, 0.0, 0.0, 0.0),
            State::new(1.0, 0.0, 0.0, 0.0),
        ];
        assert_eq!(trajectory_match_cost(&sim, &real).unwrap(), 1.5);
        assert!(trajectory_match_cost(&sim[..1], &real[..1]).is_err());
    }

    #[test]
    fn weights_run_from_one_to_half() {
        let n = 11;
        let real = vec![State::HANGING; n];
        for t in 0..n {
            let mut sim = real.clone();
            sim[t].qd2 = 1.0;
            let w = trajectory_match_cost(&sim, &real).unwrap();
            assert!((w - (1.0 - 0.05 * t as f64)).abs() < 1e-15);
        }
    }

    #[test]
    fn horizon_trims_to_window() {
        let data =
            synthetic_dataset(RobotKind::Pendubot, &ModelParams::default(), 1, 0.2, 0).unwrap();
        assert_eq!(data.horizon(), 101);
        let short = SysIdDataset {
            trim: 0.3,
            ..data.clone()
        };
        assert!(short.validate().is_err());
        let data = SysIdDataset {
            dt: 1.0,
            trim: 1.0,
            ..data
        };
        assert_eq!(data.horizon(), 2);
    }

    #[test]
    fn self_replay_costs_nothing() {
        let p = ModelParams::default();
        let data = synthetic_dataset(RobotKind::Acrobot, &p, 2, 0.5, 4).unwrap();
        assert!(sysid_cost(&p, &data).unwrap() < 1e-8);
        let off = p.with(ParamField::M2, 0.55);
        assert!(sysid_cost(&off, &data).unwrap() > 1e-6);
    }

    #[test]
    fn geometric_coupling_keeps_base_fixed_point() {
        let base = ModelParams::default();
        let param = Parameterization::new(base);
        assert_eq!(param.apply(&param.initial()).unwrap(), base);
        let p = param.apply(&[0.5, 0.5, 0.2, 0.36]).unwrap();
        assert!((p.r2 - 0.27).abs() < 1e-12);
        let com_inertia = base.i2 - base.m2 * base.r2 * base.r2;
        assert!((p.i2 - (com_inertia + 0.5 * 0.27 * 0.27)).abs() < 1e-12);
        assert_eq!(p.r1, base.r1);
    }

    #[test]
    fn multi_returns_sorted_bounded_solutions() {
        let truth = ModelParams::default();
        let data = synthetic_dataset(RobotKind::Pendubot, &truth, 1, 0.3, 1).unwrap();
        let param = Parameterization::new(truth).with_free(vec![ParamField::M2]);
        let mut cfg = DeConfig::new(param.relative_bounds(0.5), 2);
        cfg.population = Some(6);
        cfg.max_generations = 8;
        let sols = sysid_multi(&data, &param, &cfg, 3).unwrap();
        assert_eq!(sols.len(), 3);
        assert!(sols.windows(2).all(|w| w[0].cost <= w[1].cost));
        for s in &sols {
            assert!((0.25..=0.75).contains(&s.params.m2));
        }
    }
}
