use std::path::PathBuf;

use thiserror::Error;

use crate::quantum::StateReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("layout error: {0}")]
    Layout(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("degenerate spectrum: {0}")]
    Degeneracy(String),

    #[error("invalid quantum state: {0}")]
    InvalidState(StateReport),

    #[error("invalid quantum state at t = {time} ps: {report}")]
    State { time: f64, report: StateReport },

    #[error("{path}: {message}")]
    ConfigFile { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("scenario `{scenario}`: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_scenario(self, scenario: &str) -> Self {
        Error::Scenario {
            scenario: scenario.to_string(),
            source: Box::new(self),
        }
    }
}
