use std::path::PathBuf;

use thiserror::Error;

use crate::backtest::BacktestError;
use crate::config::ConfigError;
use crate::features::FeatureError;
use crate::ingest::IngestError;

/// Top-level error for the pipeline commands.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Backtest(#[from] BacktestError),
    #[error("{0}")]
    Model(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// 1 for usage and configuration, 2 for data, 3 for model failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) => 1,
            Error::Backtest(BacktestError::UnknownTermId(_) | BacktestError::BadCombo(_)) => 1,
            Error::Ingest(_) | Error::Feature(_) | Error::Io { .. } | Error::Backtest(_) => 2,
            Error::Model(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
