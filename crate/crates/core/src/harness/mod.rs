//! Experiment runner: configuration, Monte Carlo trials, sweeps, the Fock
//! oracle cross-check and result files.

pub mod config;
pub mod metrics;
pub mod oracle;
pub mod output;
pub mod runner;

pub use config::{Experiment, ExperimentConfig};
pub use metrics::{MetricsRow, COLUMNS};
pub use oracle::{cross_validate_oracle, OracleConfig, OracleReport};
pub use output::{write_results, write_sweep, Format};
pub use runner::{run_trial, run_trials, sweep, trial_seed, with_param, SweepBlock};
