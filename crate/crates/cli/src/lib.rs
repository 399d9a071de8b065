//! Run orchestration for the `rpfield` command-line tool: JSON run
//! configurations, seed derivation, command dispatch and report emission.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod seeds;

pub use commands::{run, RunOptions};
pub use config::{Command, OutputFormat, RunConfig, CONFIG_SCHEMA};
pub use error::CliError;
pub use report::{Item, Report, Table, Verdict, REPORT_SCHEMA};
