//! Experiment driver for `euler-lab-core`: configuration, the named
//! experiment kinds, and their CSV/JSON artifacts.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod dump;
pub mod experiments;
pub mod output;
pub mod snapshot;

pub use config::{load_config, ConfigError, ExperimentConfig, Kind};
pub use experiments::{measure, run_experiment, ExperimentError};
pub use output::{Check, Outcome};
