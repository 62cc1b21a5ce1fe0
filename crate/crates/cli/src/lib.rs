//! Configuration parsing and command dispatch for the `pavg` binary.

pub mod config;
pub mod run;

pub use config::{parse_config, Command, ConfigError, ConfigErrors, Overrides, RunConfig};
pub use run::{run, RunError, RunResult};
