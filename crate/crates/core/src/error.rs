use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of a model formula.
    #[error("{name} must be {expected} (got {value})")]
    Domain {
        name: &'static str,
        expected: &'static str,
        value: f64,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    /// The power function increased along the solver grid.
    #[error("received power is not monotone: P({at} m) < P({next} m)")]
    NonMonotone { at: f64, next: f64 },

    #[error("sweep result violates expected monotonicity at x = {at}")]
    SweepMonotonicity { at: f64 },

    #[error("calibration: {0}")]
    Calibration(String),

    #[error("config {path}: {message}")]
    Config { path: String, message: String },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(name: &'static str, expected: &'static str, value: f64) -> Self {
        Error::Domain { name, expected, value }
    }

    /// True for errors caused by bad user input rather than I/O.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. } | Error::Invalid(_) | Error::Config { .. } | Error::Calibration(_)
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::File { .. } | Error::Io(_) | Error::Csv(_) | Error::Json(_))
    }
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::domain(name, "finite and > 0", value))
    }
}

pub(crate) fn ensure_non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::domain(name, "finite and >= 0", value))
    }
}
