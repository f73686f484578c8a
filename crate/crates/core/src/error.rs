use std::path::PathBuf;

use thiserror::Error;

use crate::config::ConfigViolations;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(ConfigViolations),

    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("trace parse error at row {row}, column {column}: {message}")]
    TraceParse { row: usize, column: usize, message: String },

    #[error("non-positive gain at ({epoch},{node}): {value}")]
    NonPositiveGain { epoch: usize, node: usize, value: f64 },

    #[error("trace length mismatch: expected {expected} epochs, found {found}")]
    TraceLength { expected: usize, found: usize },

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("non-finite residual {value} at {at}")]
    NonFinite { at: f64, value: f64 },

    #[error("epoch {epoch}: {source}")]
    Epoch {
        epoch: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_epoch(self, epoch: usize) -> Self {
        Error::Epoch {
            epoch,
            source: Box::new(self),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable short name used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) => "invalid_config",
            Error::ConfigParse { .. } => "config_parse",
            Error::TraceParse { .. } => "trace_parse",
            Error::NonPositiveGain { .. } => "non_positive_gain",
            Error::TraceLength { .. } => "trace_length",
            Error::NoSignChange { .. } => "no_sign_change",
            Error::NonFinite { .. } => "non_finite",
            Error::Epoch { source, .. } => source.kind(),
            Error::Calibration(_) => "calibration",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
