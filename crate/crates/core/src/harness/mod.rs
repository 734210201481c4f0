//! Experiment orchestration, metrics and CSV output.

pub mod csv_out;
pub mod experiment;
pub mod lump_check;
pub mod summary;

pub use csv_out::{write_rows, write_servo_log};
pub use experiment::{
    run_experiment, run_trial, trial_seeds, ExperimentSpec, ResultRow, DEFAULT_BURN_IN,
};
pub use lump_check::{lump_check, random_chain, LumpCheckReport};
pub use summary::{summarize, trial_means, Stats, Summary};
