//! Configuration, reports and leaderboard persistence.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::controllers::ControllerFactory;
use crate::dynamics::{rollout, ImperfectionConfig, TrialSpec, DEFAULT_DT, DEFAULT_T_FINAL};
use crate::robustness::{
    generate_perturbation_profile, PerturbationConfig, RobustnessConfig, SweepContext,
};
use crate::scoring::{ScoreReport, WeightPreset, DEFAULT_THRESHOLD};
use crate::seed::{self, stream};
use crate::{par, Error, ModelParams, Result, RobotKind, State, Trajectory};

/// Number of perturbed trials in the evaluation protocol.
pub const DEFAULT_TRIALS: usize = 10;

/// Benchmark settings, read from a TOML file. Missing keys take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub robot: RobotKind,
    pub dt: f64,
    pub t_final: f64,
    pub threshold: f64,
    pub weights: WeightPreset,
    /// JSON or TOML file with [`ModelParams`] fields; defaults when absent.
    pub model_file: Option<PathBuf>,
    pub seed: u64,
    pub trials: usize,
    /// Distribution of the perturbations applied in evaluation trials.
    pub perturbation: PerturbationConfig,
    pub robustness: RobustnessConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            robot: RobotKind::Pendubot,
            dt: DEFAULT_DT,
            t_final: DEFAULT_T_FINAL,
            threshold: DEFAULT_THRESHOLD,
            weights: WeightPreset::Sim,
            model_file: None,
            seed: 0,
            trials: DEFAULT_TRIALS,
            perturbation: PerturbationConfig::default(),
            robustness: RobustnessConfig::default(),
        }
    }
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::format("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML file. A relative `model_file` is resolved against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let (Some(model), Some(dir)) = (&cfg.model_file, path.parent()) {
            if model.is_relative() {
                cfg.model_file = Some(dir.join(model));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::format("config", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final must be > 0, got {}", self.t_final));
        }
        if !self.threshold.is_finite() {
            return bad("threshold must be finite".into());
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        self.perturbation.validate()?;
        self.robustness.perturbation.validate()
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let p = match &self.model_file {
            Some(path) => load_model_params(path)?,
            None => ModelParams::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn trial_spec(&self) -> TrialSpec {
        TrialSpec::new(self.robot)
            .with_dt(self.dt)
            .with_t_final(self.t_final)
    }

    pub fn sweep_context(&self) -> SweepContext {
        SweepContext {
            trial: self.trial_spec(),
            threshold: self.threshold,
            master_seed: self.seed,
        }
    }
}

/// Reads model parameters from JSON, or TOML when the extension is `.toml`.
pub fn load_model_params(path: &Path) -> Result<ModelParams> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| Error::format("model parameters", e.to_string()))
    } else {
        Ok(serde_json::from_str(&text)?)
    }
}

/// Pretty JSON with a trailing newline.
pub fn save_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// One controller's line in the leaderboard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub name: String,
    pub scores: Vec<f64>,
    pub average: f64,
    pub best: f64,
    pub successes: usize,
    pub trials: usize,
}

impl LeaderboardRow {
    pub fn from_reports(name: impl Into<String>, reports: &[ScoreReport]) -> Result<Self> {
        if reports.is_empty() {
            return Err(Error::InvalidArgument("no trial reports".into()));
        }
        let scores: Vec<f64> = reports.iter().map(|r| r.score).collect();
        Ok(Self {
            name: name.into(),
            average: scores.iter().sum::<f64>() / scores.len() as f64,
            best: scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            successes: reports.iter().filter(|r| r.criteria.success).count(),
            trials: reports.len(),
            scores,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = !self.scores.is_empty()
            && self.trials == self.scores.len()
            && self.successes <= self.trials
            && self.scores.iter().all(|s| s.is_finite());
        if !ok {
            return Err(Error::format(
                "leaderboard row",
                format!("inconsistent row `{}`", self.name),
            ));
        }
        let mean = self.scores.iter().sum::<f64>() / self.scores.len() as f64;
        if (mean - self.average).abs() > 1e-12 {
            return Err(Error::format(
                "leaderboard row",
                format!(
                    "`{}` average {} is not the mean of its scores",
                    self.name, self.average
                ),
            ));
        }
        Ok(())
    }
}

/// Average descending, then best descending, then name ascending.
pub fn sort_leaderboard(rows: &mut [LeaderboardRow]) {
    rows.sort_by(|a, b| {
        b.average
            .total_cmp(&a.average)
            .then(b.best.total_cmp(&a.best))
            .then(a.name.cmp(&b.name))
    });
}

pub fn leaderboard_markdown(rows: &[LeaderboardRow]) -> String {
    let mut out = String::from("| rank | controller | average | best | successes |\n");
    out.push_str("|---:|---|---:|---:|---:|\n");
    for (i, r) in rows.iter().enumerate() {
        out.push_str(&format!(
            "| {} | {} | {:.4} | {:.4} | {}/{} |\n",
            i + 1,
            r.name.replace('|', "\\|"),
            r.average,
            r.best,
            r.successes,
            r.trials
        ));
    }
    out
}

pub fn write_leaderboard_csv<W: Write>(out: W, rows: &[LeaderboardRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "rank",
        "controller",
        "average",
        "best",
        "successes",
        "trials",
    ])?;
    for (i, r) in rows.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            r.name.clone(),
            r.average.to_string(),
            r.best.to_string(),
            r.successes.to_string(),
            r.trials.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<leaderboard>", e))?;
    Ok(())
}

/// Loads every `*.json` row in `dir`, sorted for display.
pub fn load_leaderboard(dir: &Path) -> Result<Vec<LeaderboardRow>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut rows = Vec::with_capacity(paths.len());
    for path in &paths {
        let row: LeaderboardRow = match load_json::<EvaluationReport>(path) {
            Ok(report) => report.row,
            Err(_) => load_json(path).map_err(|e| {
                Error::format("leaderboard row", format!("{}: {e}", path.display()))
            })?,
        };
        row.validate()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no leaderboard rows in {}",
            dir.display()
        )));
    }
    sort_leaderboard(&mut rows);
    Ok(rows)
}

/// Result of the multi-trial evaluation protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub robot: RobotKind,
    pub master_seed: u64,
    pub trials: Vec<ScoreReport>,
    pub row: LeaderboardRow,
}

/// Runs `cfg.trials` trials, each under its own perturbation profile and
/// noise stream derived from `(cfg.seed, trial index)`.
pub fn evaluate_trials(
    name: &str,
    factory: &dyn ControllerFactory,
    p: &ModelParams,
    cfg: &BenchConfig,
) -> Result<EvaluationReport> {
    cfg.validate()?;
    let spec = cfg.trial_spec();
    let reports = par::map_range(cfg.trials, |i| -> Result<ScoreReport> {
        let trial_seed = seed::derive(cfg.seed, &[stream::EVAL_TRIAL, i as u64]);
        let profile = generate_perturbation_profile(trial_seed, spec.t_final, &cfg.perturbation)?;
        let imp = ImperfectionConfig {
            rng_seed: trial_seed,
            ..ImperfectionConfig::default()
        }
        .with_perturbation(profile);
        let mut c = factory.build();
        let traj = rollout(&mut c, &spec, p, &imp)?;
        ScoreReport::evaluate(&traj, p, cfg.threshold, cfg.weights)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(EvaluationReport {
        robot: cfg.robot,
        master_seed: cfg.seed,
        row: LeaderboardRow::from_reports(name, &reports)?,
        trials: reports,
    })
}

pub const PLOT_HEADER: [&str; 9] = [
    "time", "pos1", "pos2", "vel1", "vel2", "tau1", "tau2", "pert1", "pert2",
];

/// Time series for plotting: state, applied motor torque and perturbation.
pub fn write_plot_data<W: Write>(out: W, traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PLOT_HEADER)?;
    for k in 0..traj.len() {
        let s = traj.states[k];
        let row = [
            traj.time[k],
            s.q1,
            s.q2,
            s.qd1,
            s.qd2,
            traj.tau[k][0],
            traj.tau[k][1],
            traj.tau_pert[k][0],
            traj.tau_pert[k][1],
        ];
        w.write_record(row.iter().map(f64::to_string))?;
    }
    w.flush().map_err(|e| Error::io("<plot data>", e))?;
    Ok(())
}

/// Parses plot data back into a trajectory; commands are taken to equal the
/// applied torques.
pub fn read_plot_data<R: Read>(input: R) -> Result<Trajectory> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(PLOT_HEADER) {
        return Err(Error::format("plot data", "unexpected header"));
    }
    let mut traj = Trajectory::default();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let v = rec
            .iter()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::format("plot data", format!("row {}: {e}", line + 1)))?;
        if v.len() != PLOT_HEADER.len() {
            return Err(Error::format(
                "plot data",
                format!("row {} has {} fields", line + 1, v.len()),
            ));
        }
        let tau = [v[5], v[6]];
        traj.push(
            v[0],
            State::new(v[1], v[2], v[3], v[4]),
            tau,
            tau,
            [v[7], v[8]],
        );
    }
    traj.dt = match traj.time.as_slice() {
        [a, b, ..] => b - a,
        _ => 0.0,
    };
    Ok(traj)
}
