use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {message}")]
    Config {
        message: String,
        path: Option<PathBuf>,
    },
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Machine-readable form written to stderr on failure.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub exit_code: i32,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config {
            message: message.into(),
            path: None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Solver(_) | CliError::Io { .. } => 1,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        let (error, path) = match self {
            CliError::Config { path, .. } => ("config", path.clone()),
            CliError::Solver(_) => ("solver", None),
            CliError::Io { path, .. } => ("io", Some(path.clone())),
        };
        ErrorRecord {
            error,
            message: self.to_string(),
            path: path.map(|p| p.display().to_string()),
            exit_code: self.exit_code(),
        }
    }
}

macro_rules! solver_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Solver(e.to_string())
            }
        }
    )*};
}

solver_from!(
    qnlab_core::poisson_boltzmann::PbError,
    qnlab_core::schrodinger::SchrodingerError,
    qnlab_core::euler_isothermal::EulerError,
    qnlab_core::initial_data::InitialDataError,
    qnlab_core::modulated_energy::ModulatedError,
    qnlab_core::nbody_empirical::NbodyError,
    qnlab_core::GridError
);
