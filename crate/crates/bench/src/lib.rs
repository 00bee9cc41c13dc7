//! Experiment harness for the forgetting GLM bandit policies: config
//! parsing, multi-run orchestration, aggregation, coverage checks and CSV
//! output. The `bench` binary is a thin CLI over this crate.

// `!(x > 0)` style guards are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregate;
pub mod concentration;
pub mod config;
pub mod error;
pub mod output;
pub mod runner;

pub use aggregate::{quantile, PolicyAggregate};
pub use concentration::{estimator_coverage, validate_concentration, CoverageEntry, CoverageReport};
pub use config::{ExperimentConfig, ExperimentKind, NoiseKind, PolicyOverrides, Tuning};
pub use error::{HarnessError, Result};
pub use output::{config_hash, emit_csv};
pub use runner::{run_experiment, AggregateResult, RunFailure, RunRecord};
