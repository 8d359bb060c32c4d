//! Scenario runner: parse a TOML scenario, run the requested analyses and
//! write CSV/JSON results with a checksummed manifest.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod scenario;

pub use config::{parse_config, Analysis, ScenarioConfig};
pub use scenario::{run_scenario, RunOptions, RunReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid scenario:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),
    #[error(transparent)]
    Core(#[from] arrival_core::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
