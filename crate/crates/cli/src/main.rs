//! `swingup`: simulate, score, stress-test, identify and train controllers
//! for the acrobot and pendubot swing-up benchmark.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use swingup::controllers::{EnergyLqrController, PolicyController, PolicyParams, ZeroController};
use swingup::dynamics::ParamField;
use swingup::dynamics::{rollout, ImperfectionConfig};
use swingup::io::{
    evaluate_trials, leaderboard_markdown, load_leaderboard, save_json, write_leaderboard_csv,
    write_plot_data, BenchConfig,
};
use swingup::optimize::{
    snes_train_policy, synthetic_dataset, sysid_multi, write_progress_csv, DeConfig, Objective,
    Parameterization, SysIdDataset, TrainConfig,
};
use swingup::robustness::{evaluate_robustness, write_points_csv};
use swingup::scoring::{ScoreReport, WeightPreset};
use swingup::{Controller, ModelParams, RobotKind, Trajectory};

/// Exit code for a run that completed but did not swing up.
const TASK_FAILED: u8 = 2;

#[derive(Parser)]
#[command(
    name = "swingup",
    version,
    about = "Double pendulum swing-up benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one nominal trial and write the trajectory and its score.
    Simulate(SimulateArgs),
    /// Run the perturbed multi-trial protocol and write a leaderboard row.
    Evaluate(EvaluateArgs),
    /// Run the six-criterion robustness battery.
    Robustness(RobustnessArgs),
    /// Identify model parameters from recorded trajectories.
    Sysid(SysidArgs),
    /// Train a policy network with SNES.
    Train(TrainArgs),
    /// Rank evaluation results.
    Leaderboard(LeaderboardArgs),
    /// Convert a trajectory into a plotting table.
    Plotdata(PlotdataArgs),
}

/// Settings shared by every simulation command. Flags override the file.
#[derive(Args, Clone)]
struct Common {
    /// TOML benchmark configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    robot: Option<RobotKind>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Score weights: sim or hardware.
    #[arg(long)]
    weights: Option<WeightPreset>,
    /// Model parameter file (JSON or TOML).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn resolve(&self) -> anyhow::Result<BenchConfig> {
        let mut cfg = match &self.config {
            Some(path) => BenchConfig::load(path)?,
            None => BenchConfig::default(),
        };
        if let Some(v) = self.robot {
            cfg.robot = v;
        }
        if let Some(v) = self.dt {
            cfg.dt = v;
        }
        if let Some(v) = self.t_final {
            cfg.t_final = v;
        }
        if let Some(v) = self.threshold {
            cfg.threshold = v;
        }
        if let Some(v) = self.weights {
            cfg.weights = v;
        }
        if let Some(v) = &self.model {
            cfg.model_file = Some(v.clone());
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// baseline, zero, or policy:<file>.
    #[arg(long, default_value = "baseline")]
    controller: String,
    /// Trajectory CSV.
    #[arg(long)]
    out: PathBuf,
    /// Score report JSON; defaults to the trajectory path with `.json`.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write command and perturbation columns.
    #[arg(long)]
    extended: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "baseline")]
    controller: String,
    /// Leaderboard name; defaults to the controller spec.
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Report JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RobustnessArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "baseline")]
    controller: String,
    /// Severity steps per sweep.
    #[arg(long)]
    steps: Option<usize>,
    /// Number of perturbation profiles.
    #[arg(long)]
    profiles: Option<usize>,
    /// Report JSON.
    #[arg(long)]
    out: PathBuf,
    /// Per-point CSV.
    #[arg(long)]
    points: Option<PathBuf>,
}

#[derive(Args)]
struct SysidArgs {
    #[command(flatten)]
    common: Common,
    /// Directory of trajectory CSVs.
    #[arg(long, conflicts_with = "synthetic")]
    data: Option<PathBuf>,
    /// Generate this many noise-free recordings from the model instead.
    #[arg(long)]
    synthetic: Option<usize>,
    /// Write the generated recordings here.
    #[arg(long, requires = "synthetic")]
    save_data: Option<PathBuf>,
    /// Matching horizon in seconds.
    #[arg(long, default_value_t = swingup::optimize::DEFAULT_TRIM)]
    trim: f64,
    /// Comma-separated free parameters.
    #[arg(long, value_delimiter = ',', default_value = "m1,m2,l1,l2")]
    free: Vec<ParamField>,
    /// Relative half-width of the search box around the model values.
    #[arg(long, default_value_t = 0.5)]
    bound_scale: f64,
    #[arg(long, default_value_t = 1)]
    solutions: usize,
    #[arg(long, default_value_t = 300)]
    generations: usize,
    #[arg(long)]
    population: Option<usize>,
    /// Best parameters as JSON.
    #[arg(long)]
    out: PathBuf,
    /// Progress CSV of the best run.
    #[arg(long)]
    progress: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    /// Feed the last 12 velocity frames to the network.
    #[arg(long)]
    history: bool,
    /// score, evolsac or history_sac.
    #[arg(long, default_value = "score")]
    objective: Objective,
    /// Average fitness over disturbed particles.
    #[arg(long)]
    robust: bool,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    sigma0: Option<f64>,
    /// Policy binary.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    progress: Option<PathBuf>,
}

#[derive(Args)]
struct LeaderboardArgs {
    /// Directory of evaluation reports or row JSONs.
    #[arg(long)]
    dir: PathBuf,
    /// Markdown output; stdout when absent.
    #[arg(long)]
    markdown: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct PlotdataArgs {
    /// Trajectory CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

enum Spec {
    Baseline,
    Zero,
    Policy(PolicyParams),
}

impl Spec {
    fn parse(s: &str) -> anyhow::Result<Self> {
        match s {
            "baseline" => Ok(Spec::Baseline),
            "zero" => Ok(Spec::Zero),
            _ => match s.strip_prefix("policy:") {
                Some(path) => Ok(Spec::Policy(PolicyParams::load(Path::new(path))?)),
                None => {
                    bail!("unknown controller `{s}` (expected baseline, zero or policy:<file>)")
                }
            },
        }
    }

    fn build(&self, kind: RobotKind, p: &ModelParams) -> anyhow::Result<Box<dyn Controller>> {
        Ok(match self {
            Spec::Baseline => Box::new(EnergyLqrController::with_defaults(kind, *p)?),
            Spec::Zero => Box::new(ZeroController),
            Spec::Policy(pol) => Box::new(PolicyController::new(pol.clone(), p.tau_limits())),
        })
    }

    /// Checks construction once so the factory below cannot fail.
    fn factory(
        &self,
        kind: RobotKind,
        p: ModelParams,
    ) -> anyhow::Result<impl Fn() -> Box<dyn Controller> + Sync + '_> {
        self.build(kind, &p)?;
        Ok(move || {
            self.build(kind, &p)
                .expect("controller construction checked")
        })
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(TASK_FAILED)
    }
}

fn simulate(args: SimulateArgs) -> anyhow::Result<ExitCode> {
    let cfg = args.common.resolve()?;
    let p = cfg.model_params()?;
    let mut c = Spec::parse(&args.controller)?.build(cfg.robot, &p)?;
    let traj = rollout(
        &mut c,
        &cfg.trial_spec(),
        &p,
        &ImperfectionConfig::default(),
    )?;
    traj.save(&args.out, args.extended)?;
    let report = ScoreReport::evaluate(&traj, &p, cfg.threshold, cfg.weights)?;
    let report_path = args
        .report
        .unwrap_or_else(|| args.out.with_extension("json"));
    save_json(&report_path, &report)?;
    println!("success={} score={}", report.criteria.success, report.score);
    Ok(status(report.criteria.success))
}

fn evaluate(args: EvaluateArgs) -> anyhow::Result<ExitCode> {
    let mut cfg = args.common.resolve()?;
    if let Some(n) = args.trials {
        cfg.trials = n;
    }
    let p = cfg.model_params()?;
    let spec = Spec::parse(&args.controller)?;
    let factory = spec.factory(cfg.robot, p)?;
    let name = args.name.unwrap_or(args.controller);
    let report = evaluate_trials(&name, &factory, &p, &cfg)?;
    save_json(&args.out, &report)?;
    let row = &report.row;
    println!(
        "average={} best={} successes={}/{}",
        row.average, row.best, row.successes, row.trials
    );
    Ok(status(row.successes > 0))
}

fn robustness(args: RobustnessArgs) -> anyhow::Result<ExitCode> {
    let mut cfg = args.common.resolve()?;
    if let Some(n) = args.steps {
        cfg.robustness.steps = n;
    }
    if let Some(n) = args.profiles {
        cfg.robustness.profiles = n;
    }
    let p = cfg.model_params()?;
    let spec = Spec::parse(&args.controller)?;
    let factory = spec.factory(cfg.robot, p)?;
    let (report, outcomes) =
        evaluate_robustness(&factory, &p, &cfg.robustness, &cfg.sweep_context())?;
    save_json(&args.out, &report)?;
    if let Some(path) = &args.points {
        write_points_csv(create(path)?, &outcomes)?;
    }
    println!("final={}", report.final_score);
    Ok(ExitCode::SUCCESS)
}

fn sysid(args: SysidArgs) -> anyhow::Result<ExitCode> {
    let cfg = args.common.resolve()?;
    let p = cfg.model_params()?;
    let data = match (&args.data, args.synthetic) {
        (Some(dir), None) => SysIdDataset::load_dir(dir, args.trim)?,
        (None, Some(n)) => {
            let data = synthetic_dataset(cfg.robot, &p, n, args.trim, cfg.seed)?;
            if let Some(dir) = &args.save_data {
                fs::create_dir_all(dir)
                    .with_context(|| format!("cannot create {}", dir.display()))?;
                for (i, r) in data.recordings.iter().enumerate() {
                    let mut t = Trajectory::with_capacity(data.dt, r.len());
                    for (k, (s, tau)) in r.states.iter().zip(&r.torque).enumerate() {
                        t.push(k as f64 * data.dt, *s, *tau, *tau, [0.0; 2]);
                    }
                    t.save(&dir.join(format!("recording_{i:03}.csv")), false)?;
                }
            }
            data
        }
        _ => bail!("give exactly one of --data or --synthetic"),
    };
    let param = Parameterization::new(p).with_free(args.free);
    let mut de = DeConfig::new(param.relative_bounds(args.bound_scale), cfg.seed);
    de.max_generations = args.generations;
    de.population = args.population;
    let sols = sysid_multi(&data, &param, &de, args.solutions)?;
    let best = &sols[0];
    best.save_params(&args.out)?;
    if let Some(path) = &args.progress {
        write_progress_csv(create(path)?, &best.history)?;
    }
    let costs: Vec<f64> = sols.iter().map(|s| s.cost).collect();
    println!(
        "{}",
        serde_json::json!({ "cost": best.cost, "costs": costs })
    );
    Ok(ExitCode::SUCCESS)
}

fn train(args: TrainArgs) -> anyhow::Result<ExitCode> {
    let cfg = args.common.resolve()?;
    let p = cfg.model_params()?;
    let mut tc = TrainConfig {
        objective: args.objective,
        robust: args.robust,
        weights: cfg.weights,
        threshold: cfg.threshold,
        t_final: cfg.t_final,
        disturbance: cfg.perturbation,
        seed: cfg.seed,
        history_window: if args.history {
            swingup::controllers::HISTORY_WINDOW
        } else {
            0
        },
        ..TrainConfig::default()
    };
    if let Some(v) = args.generations {
        tc.generations = v;
    }
    if let Some(v) = args.population {
        tc.population = v;
    }
    if let Some(v) = args.hidden {
        tc.hidden = v;
    }
    if let Some(v) = args.particles {
        tc.particles = v;
    }
    if let Some(v) = args.sigma0 {
        tc.sigma0 = v;
    }
    let out = snes_train_policy(cfg.robot, &p, &tc)?;
    out.policy.save(&args.out)?;
    if let Some(path) = &args.progress {
        write_progress_csv(create(path)?, &out.history)?;
    }
    println!(
        "best_fitness={} evaluations={}",
        out.best_fitness, out.evaluations
    );
    Ok(ExitCode::SUCCESS)
}

fn leaderboard(args: LeaderboardArgs) -> anyhow::Result<ExitCode> {
    let rows = load_leaderboard(&args.dir)?;
    let md = leaderboard_markdown(&rows);
    match &args.markdown {
        Some(path) => {
            fs::write(path, &md).with_context(|| format!("cannot write {}", path.display()))?
        }
        None => io::stdout().write_all(md.as_bytes())?,
    }
    if let Some(path) = &args.csv {
        write_leaderboard_csv(create(path)?, &rows)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn plotdata(args: PlotdataArgs) -> anyhow::Result<ExitCode> {
    let traj = Trajectory::load(&args.input)?;
    write_plot_data(create(&args.out)?, &traj)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Robustness(a) => robustness(a),
        Command::Sysid(a) => sysid(a),
        Command::Train(a) => train(a),
        Command::Leaderboard(a) => leaderboard(a),
        Command::Plotdata(a) => plotdata(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
