//! Batch runner for the DGFF convergence experiments.
//!
//! A run reads an [`ExperimentConfig`](config::ExperimentConfig), builds the
//! grids and graphs once per replicate ([`experiment::Experiment`]), runs the
//! selected suites and writes a JSON report plus CSV tables.

pub mod config;
pub mod error;
pub mod experiment;
pub mod report;
pub mod suites;

pub use config::{parse_config, parse_config_str, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use report::{build_report, run, verify_report, Command, Report, RunOptions};
pub use suites::{run_assumption_suite, run_covariance_convergence, run_sobolev_suite};
