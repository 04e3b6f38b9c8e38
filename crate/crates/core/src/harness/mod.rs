//! Experiment orchestration: TOML configs, scenario pipelines with pass/fail
//! verdicts, decay-exponent fits and blow-down comparisons.
//!
//! Every run writes into its own directory: `config.toml` (the resolved
//! config), CSV series, `verdicts.json` and `run.log`.

mod blowdown;
mod config;
mod experiment;
mod fit;
mod perturbation;

pub use blowdown::{compare_blowdown, rescaled_deviation, BlowdownReport, ExpanderBase, ScaledDeviation};
pub use config::{
    Center, ConeConfig, EntropyParams, ExpanderParams, ExperimentConfig, ExperimentKind, FlowParams, GridConfig,
    InitialConfig, SweepParams,
};
pub use experiment::{resolved_bump, run_experiment, run_sweep, sweep_configs, ExperimentSummary, Verdict};
pub use fit::{fit_decay_exponent, log_times, measured_kappa, reference_exponent, FitReport, MIN_FIT_SAMPLES};
pub use perturbation::{bump_from_bounds, smoothed_abs, SmoothedCone, BOUND_SAFETY, PHI1_MAX, PHI2_MAX, PHI_MAX};
