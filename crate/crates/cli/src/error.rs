use std::path::PathBuf;

use illiquid_core::attenuation::AttenuationError;
use illiquid_core::markov::MarkovError;
use illiquid_core::regime::RegimeError;
use illiquid_core::stats::StatsError;
use illiquid_core::timeseries::TimeseriesError;
use thiserror::Error;

use crate::ingest::IngestError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Ingest {
        path: PathBuf,
        #[source]
        source: IngestError,
    },
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("series: {0}")]
    Series(#[from] TimeseriesError),
    #[error("markov: {0}")]
    Markov(#[from] MarkovError),
    #[error("{0}")]
    Regime(#[from] RegimeError),
    #[error("stats: {0}")]
    Stats(#[from] StatsError),
    #[error("attenuation: {0}")]
    Attenuation(#[from] AttenuationError),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    /// Stable identifier printed on the first line of every failure.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Format { .. } => "format",
            CliError::Ingest { .. } => "ingest",
            CliError::Config { .. } => "config",
            CliError::Series(_) => "series",
            CliError::Markov(_) => "markov",
            CliError::Regime(RegimeError::Sde(_)) => "calibration",
            CliError::Regime(_) => "regime",
            CliError::Stats(_) => "stats",
            CliError::Attenuation(_) => "attenuation",
            CliError::Input(_) => "input",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
