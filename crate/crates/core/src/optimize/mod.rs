//! Gradient-free optimizers and the procedures built on them: separable
//! natural evolution strategies for policy search, and differential
//! evolution for system identification.

mod de;
mod progress;
mod snes;
mod sysid;
mod train;

pub use de::{differential_evolution, DeConfig, DeResult};
pub use progress::{write_progress_csv, GenerationStats};
pub use snes::{
    snes_run, snes_step, snes_step_with, snes_utilities, GaussianSource, SeededGaussian,
    SnesGeneration, SnesRun, SnesState, ZeroGaussian,
};
pub use sysid::{
    identify, replay, synthetic_dataset, sysid_cost, sysid_multi, trajectory_match_cost, Coupling,
    Parameterization, SysIdDataset, SysIdRecording, SysIdSolution, DEFAULT_TRIM,
};
pub use train::{
    episode_fitness, rollout_with_disturbances, snes_train_policy, Objective, TrainConfig,
    TrainOutcome,
};
