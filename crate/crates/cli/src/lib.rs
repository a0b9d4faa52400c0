//! Command-line front end: cohort generation and description, benchmark
//! grids, ROC export and strategy comparison.

pub mod commands;
pub mod config;
pub mod error;
pub mod runner;

pub use commands::{run, Cli};
pub use config::BenchmarkConfig;
pub use error::{CliError, CliResult};
