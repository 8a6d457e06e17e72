//! Benchmark harness for the `psga` optimizers: TOML suites in, CSV traces
//! and a summary table out.

pub mod cli;
pub mod config;
pub mod error;
pub mod report;
pub mod runner;
pub mod selftest;

pub use config::{Algorithm, Overrides, Problem, RunConfig, Suite};
pub use error::{BenchError, Result};
pub use report::{summarize, Outcome, SummaryRow};
pub use runner::{execute, run_suite, run_suite_with, DataCache, RunResult, SuiteReport};
