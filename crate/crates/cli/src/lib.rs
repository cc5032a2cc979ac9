//! Experiment harness behind the `expertstream` binary.

pub mod commands;
pub mod config;
pub mod plot;
pub mod run;

use std::fmt;

pub use config::ExperimentConfig;

/// Exit status: malformed input or I/O trouble.
pub const EXIT_CONFIG: u8 = 1;
/// Exit status: a proven guarantee was breached.
pub const EXIT_VIOLATION: u8 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { code: EXIT_CONFIG, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<expertstream_core::Error> for CliError {
    fn from(e: expertstream_core::Error) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::config(e.to_string())
    }
}
