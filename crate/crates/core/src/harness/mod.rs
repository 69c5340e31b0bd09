//! Experiment configuration, the Monte Carlo driver and result files.

pub mod config;
pub mod emit;
pub mod experiment;
pub mod fixture;

pub use config::{Algorithm, ExperimentSpec, FadingSpec, NetworkSpec, OutputFormat, PlacementSpec};
pub use emit::{emit_results, format_g6, render, to_csv, to_json};
pub use experiment::{
    aggregate, count_info_units, run_experiment, run_trials, trace_trial, trial_instance,
    ResultRow, TrialInstance, TrialOutcome,
};
pub use fixture::{make_fixture, verify_fixture, Fixture};
