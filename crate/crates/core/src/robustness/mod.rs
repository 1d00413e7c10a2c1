//! Robustness evaluation: one-at-a-time severity sweeps over six kinds of
//! imperfection, aggregated into a mean success fraction.

mod perturbation;
mod sweep;

pub use perturbation::{
    generate_perturbation_profile, Bump, PerturbationConfig, PerturbationProfile,
};
pub use sweep::{
    eval_perturbations, evaluate_robustness, linspace, robustness_score, sweep_model_inaccuracies,
    sweep_scalar, write_points_csv, Criterion, RobustnessConfig, RobustnessReport, SweepContext,
    SweepOutcome, SweepPoint, SweepSpec, DEFAULT_PROFILES, DEFAULT_STEPS,
};
