//! Experiment runner: presets, sweeps and invariant validation.

pub mod config;
pub mod run;
pub mod validate;

pub use config::{ExperimentConfig, MethodChoice};
pub use run::{run_experiment, write_outputs};
pub use validate::validate_invariants;
