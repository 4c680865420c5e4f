use std::path::PathBuf;

use thiserror::Error;

use crate::io::config::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |m - m†| = {0:e})")]
    NotHermitian(f64),

    #[error("measurement outcome {outcome} has probability {probability:e}")]
    ZeroProbabilityOutcome { outcome: u8, probability: f64 },

    #[error("invariant violated at t = {t}: {what}")]
    InvariantViolation { t: f64, what: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
