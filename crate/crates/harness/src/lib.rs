//! Experiment orchestration for `smcsmooth`: configuration, replicated
//! benchmark runs at matched budgets, accuracy metrics, significance tests,
//! CSV ingestion and the `smcsmooth` command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod ingest;
pub mod metrics;
pub mod models;
pub mod significance;

pub use config::{Algorithm, AlgorithmSpec, Budget, ExperimentConfig, ModelKind};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, MetricsReport};
