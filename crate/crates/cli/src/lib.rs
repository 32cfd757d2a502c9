//! Experiment drivers around the steady-state solver: configuration
//! parsing, scans, the ordering comparison, and CSV/JSON result emission.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use experiments::{
    compare_orderings, fit_transport_exponent, run_experiment, ExperimentReport, TransportFit,
};
