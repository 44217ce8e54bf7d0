//! Configuration, ensembles and the command-line front end.

pub mod cli;
pub mod commands;
pub mod config;
mod output;

use std::path::PathBuf;

use thiserror::Error;

use crate::causal::ScenarioError;
use crate::detection::DetectionError;
use crate::spinboson::SpinBosonError;
use crate::wavepacket::WavepacketError;

pub use cli::{run, Cli, Command};
pub use commands::{cmd_detect, cmd_epr, cmd_spinboson, cmd_wavepacket, EnsembleSummary, RunFlags};
pub use config::{ConfigError, ConfigSource};
pub use output::{binomial_half_width, chi_square_test, ChiSquareTest};

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "CATCOLLAPSE_THREADS";

pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const IO: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const REJECTED: i32 = 3;
    pub const BUDGET: i32 = 4;
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Rejected(String),
    #[error("numerical budget exhausted: {0}")]
    Budget(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Invalid(_) => exit_code::CONFIG,
            HarnessError::Rejected(_) => exit_code::REJECTED,
            HarnessError::Budget(_) => exit_code::BUDGET,
            HarnessError::Io { .. } => exit_code::IO,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<SpinBosonError> for HarnessError {
    fn from(e: SpinBosonError) -> Self {
        match e {
            SpinBosonError::DimensionTooLarge { .. }
            | SpinBosonError::ToleranceNotAchievable { .. }
            | SpinBosonError::CutoffBudgetExhausted { .. } => HarnessError::Budget(e.to_string()),
            other => HarnessError::Invalid(other.to_string()),
        }
    }
}

impl From<ScenarioError> for HarnessError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Rejected(_) => HarnessError::Rejected(e.to_string()),
            ScenarioError::SpinBoson(inner) => inner.into(),
            other => HarnessError::Invalid(other.to_string()),
        }
    }
}

impl From<WavepacketError> for HarnessError {
    fn from(e: WavepacketError) -> Self {
        HarnessError::Invalid(e.to_string())
    }
}

impl From<DetectionError> for HarnessError {
    fn from(e: DetectionError) -> Self {
        HarnessError::Invalid(e.to_string())
    }
}
