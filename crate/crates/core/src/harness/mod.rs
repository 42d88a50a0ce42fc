//! Experiment configuration, orchestration and presets.

pub mod config;
pub mod presets;
pub mod run;

pub use config::{parse_overrides, ExperimentConfig, Method, ProblemSpec, Variances};
pub use presets::{preset, PRESET_NAMES};
pub use run::{
    build_problem, run_experiment, run_on_problem, run_trajectories, solve_optimum, BuiltProblem, Experiment, Optimum, Summary, CSV_HEADER,
};
