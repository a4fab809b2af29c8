//! Experiment runner for the D3C library: config files, seeded parallel
//! runs, and CSV/JSON output.

pub mod config;
pub mod emit;
pub mod experiments;
pub mod runner;

pub use config::{Algo, ConfigError, Experiment, ExperimentConfig};
pub use experiments::{run_experiment, ExperimentError, ExperimentOutput};
