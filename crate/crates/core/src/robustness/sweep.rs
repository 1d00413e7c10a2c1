use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::perturbation::{generate_perturbation_profile, PerturbationConfig};
use crate::controllers::ControllerFactory;
use crate::dynamics::{rollout, ImperfectionConfig, ModelParams, ParamField, RobotKind, TrialSpec};
use crate::scoring::{check_success, DEFAULT_THRESHOLD};
use crate::seed::{self, stream};
use crate::{par, Error, Result};

/// Severity steps per sweep.
pub const DEFAULT_STEPS: usize = 21;
/// Number of random perturbation profiles.
pub const DEFAULT_PROFILES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Model,
    VelocityNoise,
    TorqueNoise,
    TorqueResponse,
    Delay,
    Perturbation,
}

impl Criterion {
    pub const ALL: [Criterion; 6] = [
        Criterion::Model,
        Criterion::VelocityNoise,
        Criterion::TorqueNoise,
        Criterion::TorqueResponse,
        Criterion::Delay,
        Criterion::Perturbation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Model => "model",
            Criterion::VelocityNoise => "velocity_noise",
            Criterion::TorqueNoise => "torque_noise",
            Criterion::TorqueResponse => "torque_response",
            Criterion::Delay => "delay",
            Criterion::Perturbation => "perturbation",
        }
    }

    fn stream(self) -> u64 {
        match self {
            Criterion::Model => stream::SWEEP_MODEL,
            Criterion::VelocityNoise => stream::SWEEP_VEL_NOISE,
            Criterion::TorqueNoise => stream::SWEEP_TORQUE_NOISE,
            Criterion::TorqueResponse => stream::SWEEP_RESPONSE,
            Criterion::Delay => stream::SWEEP_DELAY,
            Criterion::Perturbation => stream::SWEEP_PERTURBATION,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Evenly spaced grid from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    end
                } else {
                    start + (end - start) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// One sweep: a criterion, its severity grid and, for model sweeps, the
/// parameters scaled one at a time by each grid value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub criterion: Criterion,
    pub grid: Vec<f64>,
    pub parameters: Vec<ParamField>,
}

impl SweepSpec {
    pub fn scalar(criterion: Criterion, grid: Vec<f64>) -> Self {
        Self {
            criterion,
            grid,
            parameters: vec![],
        }
    }

    pub fn model(grid: Vec<f64>, parameters: Vec<ParamField>) -> Self {
        Self {
            criterion: Criterion::Model,
            grid,
            parameters,
        }
    }

    /// Number of rollouts the sweep executes.
    pub fn runs(&self) -> usize {
        match self.criterion {
            Criterion::Model => self.grid.len() * self.parameters.len(),
            _ => self.grid.len(),
        }
    }
}

/// Trial settings shared by every rollout of an evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepContext {
    pub trial: TrialSpec,
    pub threshold: f64,
    pub master_seed: u64,
}

impl SweepContext {
    pub fn new(kind: RobotKind, master_seed: u64) -> Self {
        Self {
            trial: TrialSpec::new(kind),
            threshold: DEFAULT_THRESHOLD,
            master_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub criterion: Criterion,
    pub parameter: Option<ParamField>,
    pub severity: f64,
    pub success: bool,
}

impl SweepPoint {
    fn label(&self) -> String {
        match self.parameter {
            Some(f) => format!("{}/{}", self.criterion, f),
            None => self.criterion.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub criterion: Criterion,
    pub points: Vec<SweepPoint>,
}

impl SweepOutcome {
    pub fn runs(&self) -> usize {
        self.points.len()
    }

    pub fn successes(&self) -> usize {
        self.points.iter().filter(|p| p.success).count()
    }

    /// Success fraction; 0 for an empty sweep.
    pub fn fraction(&self) -> f64 {
        if self.points.is_empty() {
            0.0
        } else {
            self.successes() as f64 / self.points.len() as f64
        }
    }
}

fn trial_succeeds(
    factory: &dyn ControllerFactory,
    trial: &TrialSpec,
    p: &ModelParams,
    imp: &ImperfectionConfig,
    threshold: f64,
) -> Result<bool> {
    let mut controller = factory.build();
    let traj = rollout(controller.as_mut(), trial, p, imp)?;
    Ok(check_success(&traj, p, threshold))
}

/// Scales each listed parameter of the simulated plant by every grid value
/// while the controller (and the actuator model) keep the nominal values.
/// Every point is rolled out, even when the scaled geometry puts a centre
/// of mass past the link end; a plant that diverges counts as a failure.
pub fn sweep_model_inaccuracies(
    factory: &dyn ControllerFactory,
    nominal: &ModelParams,
    spec: &SweepSpec,
    ctx: &SweepContext,
) -> Result<SweepOutcome> {
    let trial = TrialSpec {
        actuator_model: Some(*nominal),
        ..ctx.trial.clone()
    };
    let cases: Vec<(ParamField, f64)> = spec
        .parameters
        .iter()
        .flat_map(|&f| spec.grid.iter().map(move |&s| (f, s)))
        .collect();
    let results = par::map_range(cases.len(), |i| {
        let (field, scale) = cases[i];
        let plant = nominal.with(field, field.get(nominal) * scale);
        let imp = ImperfectionConfig {
            rng_seed: seed::derive(ctx.master_seed, &[stream::SWEEP_MODEL, i as u64]),
            ..Default::default()
        };
        trial_succeeds(factory, &trial, &plant, &imp, ctx.threshold)
    });
    let points = cases
        .iter()
        .zip(results)
        .map(|(&(field, scale), ok)| {
            Ok(SweepPoint {
                criterion: Criterion::Model,
                parameter: Some(field),
                severity: scale,
                success: ok?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepOutcome {
        criterion: Criterion::Model,
        points,
    })
}

/// One rollout per grid value, the value mapped onto the matching
/// imperfection: velocity noise sigma, torque noise sigma, responsiveness
/// factor or delay.
pub fn sweep_scalar(
    factory: &dyn ControllerFactory,
    p: &ModelParams,
    spec: &SweepSpec,
    ctx: &SweepContext,
) -> Result<SweepOutcome> {
    let criterion = spec.criterion;
    if matches!(criterion, Criterion::Model | Criterion::Perturbation) {
        return Err(Error::InvalidArgument(format!(
            "{criterion} is not a scalar sweep"
        )));
    }
    let results = par::map_range(spec.grid.len(), |i| {
        let severity = spec.grid[i];
        let mut imp = ImperfectionConfig {
            rng_seed: seed::derive(ctx.master_seed, &[criterion.stream(), i as u64]),
            ..Default::default()
        };
        match criterion {
            Criterion::VelocityNoise => imp.vel_noise_sigma = severity,
            Criterion::TorqueNoise => imp.torque_noise_sigma = severity,
            Criterion::TorqueResponse => imp.k_resp = severity,
            Criterion::Delay => imp.delay = severity,
            Criterion::Model | Criterion::Perturbation => unreachable!(),
        }
        trial_succeeds(factory, &ctx.trial, p, &imp, ctx.threshold)
    });
    let points = spec
        .grid
        .iter()
        .zip(results)
        .map(|(&severity, ok)| {
            Ok(SweepPoint {
                criterion,
                parameter: None,
                severity,
                success: ok?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepOutcome { criterion, points })
}

/// Runs one trial per seed, each with its own random perturbation profile.
/// The point's `severity` records the profile index.
pub fn eval_perturbations(
    factory: &dyn ControllerFactory,
    p: &ModelParams,
    seeds: &[u64],
    pert: &PerturbationConfig,
    ctx: &SweepContext,
) -> Result<SweepOutcome> {
    pert.validate()?;
    let results = par::map_range(seeds.len(), |i| {
        let profile = generate_perturbation_profile(seeds[i], ctx.trial.t_final, pert)?;
        let imp = ImperfectionConfig {
            rng_seed: seeds[i],
            ..Default::default()
        }
        .with_perturbation(profile);
        trial_succeeds(factory, &ctx.trial, p, &imp, ctx.threshold)
    });
    let points = results
        .into_iter()
        .enumerate()
        .map(|(i, ok)| {
            Ok(SweepPoint {
                criterion: Criterion::Perturbation,
                parameter: None,
                severity: i as f64,
                success: ok?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepOutcome {
        criterion: Criterion::Perturbation,
        points,
    })
}

/// The six success fractions and their mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    #[serde(rename = "model")]
    pub c_m: f64,
    #[serde(rename = "velocity_noise")]
    pub c_v_noise: f64,
    #[serde(rename = "torque_noise")]
    pub c_tau_noise: f64,
    #[serde(rename = "torque_response")]
    pub c_tau_resp: f64,
    #[serde(rename = "delay")]
    pub c_d: f64,
    #[serde(rename = "perturbation")]
    pub c_p: f64,
    #[serde(rename = "final")]
    pub final_score: f64,
}

impl RobustnessReport {
    pub fn fractions(&self) -> [f64; 6] {
        [
            self.c_m,
            self.c_v_noise,
            self.c_tau_noise,
            self.c_tau_resp,
            self.c_d,
            self.c_p,
        ]
    }
}

/// Averages the six fractions, ordered model, velocity noise, torque noise,
/// torque response, delay, perturbation.
pub fn robustness_score(parts: [f64; 6]) -> Result<RobustnessReport> {
    if let Some(bad) = parts.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidArgument(format!(
            "success fraction {bad} outside [0, 1]"
        )));
    }
    let [c_m, c_v_noise, c_tau_noise, c_tau_resp, c_d, c_p] = parts;
    Ok(RobustnessReport {
        c_m,
        c_v_noise,
        c_tau_noise,
        c_tau_resp,
        c_d,
        c_p,
        final_score: (c_m + c_v_noise + c_tau_noise + c_tau_resp + c_d + c_p) / 6.0,
    })
}

/// Full robustness battery settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobustnessConfig {
    pub steps: usize,
    pub model_scale: [f64; 2],
    pub model_parameters: Vec<ParamField>,
    pub velocity_noise: [f64; 2],
    pub torque_noise: [f64; 2],
    pub k_resp: [f64; 2],
    pub delay: [f64; 2],
    pub profiles: usize,
    pub perturbation: PerturbationConfig,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            model_scale: [0.75, 1.25],
            model_parameters: ParamField::INDEPENDENT.to_vec(),
            velocity_noise: [0.0, 0.5],
            torque_noise: [0.0, 0.5],
            k_resp: [1.0, 0.2],
            delay: [0.0, 0.05],
            profiles: DEFAULT_PROFILES,
            perturbation: PerturbationConfig::default(),
        }
    }
}

impl RobustnessConfig {
    pub fn spec(&self, criterion: Criterion) -> SweepSpec {
        let grid = |r: [f64; 2]| linspace(r[0], r[1], self.steps);
        match criterion {
            Criterion::Model => {
                SweepSpec::model(grid(self.model_scale), self.model_parameters.clone())
            }
            Criterion::VelocityNoise => SweepSpec::scalar(criterion, grid(self.velocity_noise)),
            Criterion::TorqueNoise => SweepSpec::scalar(criterion, grid(self.torque_noise)),
            Criterion::TorqueResponse => SweepSpec::scalar(criterion, grid(self.k_resp)),
            Criterion::Delay => SweepSpec::scalar(criterion, grid(self.delay)),
            Criterion::Perturbation => {
                SweepSpec::scalar(criterion, (0..self.profiles).map(|i| i as f64).collect())
            }
        }
    }

    pub fn perturbation_seeds(&self, master_seed: u64) -> Vec<u64> {
        (0..self.profiles as u64)
            .map(|i| seed::derive(master_seed, &[stream::SWEEP_PERTURBATION, i]))
            .collect()
    }
}

/// Runs all six criteria and returns the report with every sweep point.
pub fn evaluate_robustness(
    factory: &dyn ControllerFactory,
    p: &ModelParams,
    cfg: &RobustnessConfig,
    ctx: &SweepContext,
) -> Result<(RobustnessReport, Vec<SweepOutcome>)> {
    let model = sweep_model_inaccuracies(factory, p, &cfg.spec(Criterion::Model), ctx)?;
    let mut outcomes = vec![model];
    for c in [
        Criterion::VelocityNoise,
        Criterion::TorqueNoise,
        Criterion::TorqueResponse,
        Criterion::Delay,
    ] {
        outcomes.push(sweep_scalar(factory, p, &cfg.spec(c), ctx)?);
    }
    let seeds = cfg.perturbation_seeds(ctx.master_seed);
    outcomes.push(eval_perturbations(
        factory,
        p,
        &seeds,
        &cfg.perturbation,
        ctx,
    )?);

    let mut parts = [0.0; 6];
    for (slot, o) in parts.iter_mut().zip(&outcomes) {
        *slot = o.fraction();
    }
    Ok((robustness_score(parts)?, outcomes))
}

/// Per-point CSV: `criterion,severity,success`. Model points are labelled
/// `model/<parameter>`.
pub fn write_points_csv<W: Write>(out: W, outcomes: &[SweepOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["criterion", "severity", "success"])?;
    for p in outcomes.iter().flat_map(|o| &o.points) {
        w.write_record([
            p.label(),
            p.severity.to_string(),
            (p.success as u8).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<sweep points>", e))?;
    Ok(())
}
