//! Experiment plumbing: initial data, configuration, the run pipeline with
//! its artifacts, and the validation suites behind the command line.

pub mod config;
pub mod experiment;
pub mod initial;
pub mod suites;

pub use config::ExperimentConfig;
pub use experiment::{analyze_file, analyze_table, run_experiment, Report, RunOutcome};
pub use initial::{generate_initial_data, InitialDataSpec};
