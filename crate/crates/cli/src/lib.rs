//! Batch front end for `greens-core`: reads a job config, runs one of the
//! `build`, `verify`, `sample` or `solve` commands and emits text or CSV.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;

pub use commands::{run, run_file, Command, Outcome, Overrides};
pub use config::JobConfig;
pub use error::CliError;
