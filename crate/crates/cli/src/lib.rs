//! Configuration, orchestration and artifact writers for the `gmm-bridge`
//! command-line tool.

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, ConfigError, ProblemConfig};
pub use run::{execute, CliError, Command, Overrides};
