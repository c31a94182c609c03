use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the engine.
#[derive(Debug, Error)]
pub enum Error {
    /// A point lies outside the domain of the potential (or of an operation).
    #[error("domain violation: {0}")]
    Domain(String),

    /// An argument failed validation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The observation handed to an estimator does not match what the signal
    /// function of the estimator's feedback model produces.
    #[error("signal mismatch: {0}")]
    SignalMismatch(String),

    /// An iterative solver ran out of iterations.
    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// The requested potential/geometry/estimator combination is not supported.
    #[error("unsupported combination: {0}")]
    Unsupported(String),

    /// A fixed loss sequence ran out before the horizon.
    #[error("loss sequence exhausted at round {round} (length {len})")]
    Exhausted { round: usize, len: usize },

    /// Every atom of a posterior was ruled out by an observation.
    #[error("observation at round {round} is impossible under the prior")]
    ImpossibleObservation { round: usize },

    /// Exhaustive enumeration would exceed its size guard.
    #[error("enumeration budget exceeded: needs {required} leaves, limit is {limit} ({detail})")]
    BudgetExceeded {
        required: u128,
        limit: u128,
        detail: String,
    },

    /// Configuration failed schema validation; one entry per offending field.
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    /// A failure inside a simulation, with the round at which it happened.
    #[error("round {round}: {source}")]
    AtRound {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("parse error in {what}: {detail}")]
    Parse { what: String, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn at_round(self, round: usize) -> Self {
        Error::AtRound {
            round,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
