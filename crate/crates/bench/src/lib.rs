//! Benchmark harness for `relayout`: synthetic and file datasets, query
//! generators, experiment configs, and static/dynamic runners that emit
//! CSV and JSON reports.

pub mod config;
pub mod data;
pub mod error;
pub mod report;
pub mod runner;
pub mod workloads;

pub use config::ExperimentConfig;
pub use error::{BenchError, Result};
pub use runner::{run_dynamic, run_static, DynamicReport, StaticReport};
