//! Command-line harness: corpus manifests, run configuration, parallel
//! orchestration and result persistence.

pub mod cli;
pub mod config;
pub mod manifest;
pub mod runner;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => cli::EXIT_USAGE,
            HarnessError::Data(_) => cli::EXIT_DATA,
        }
    }
}
