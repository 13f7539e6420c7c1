//! Scenario-driven front end for `ionmem-core`.
//!
//! A scenario is a TOML file naming an atomic-constants file, the transition
//! and operating field, noise, and the settings of one or more commands.
//! Every run writes CSV outputs and a `manifest.json` with checksums.

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

pub use commands::{run, Command};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "IONMEM_WORKERS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

/// Worker count from `IONMEM_WORKERS`; `None` when unset (rayon default).
pub fn workers_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(WORKERS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Config(format!("{WORKERS_ENV}: {e}"))),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}
