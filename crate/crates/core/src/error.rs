use thiserror::Error;

use crate::synth::ChaosCertificate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or non-finite input data.
    #[error("invalid input: {0}")]
    Input(String),

    /// Input is well formed but outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix {index} is singular: smallest singular value {min_singular_value:e} <= tolerance {tol:e}")]
    Singular {
        /// 1-based position of the matrix in the system.
        index: usize,
        min_singular_value: f64,
        tol: f64,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A law was queried past the end of its finite schedule.
    #[error("index {index} is beyond the law's defined horizon {horizon}")]
    Horizon { index: u64, horizon: u64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A synthesis search hit its cap. `partial` carries the stages that completed.
    #[error("{what} exceeded its cap of {cap} at stage {stage}")]
    CapExceeded {
        what: String,
        cap: u64,
        stage: usize,
        partial: Option<Box<ChaosCertificate>>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
