use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("SNP {snp_id} has zero variance (monomorphic column)")]
    ZeroVariance { snp_id: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate identifiers: {0:?}")]
    Duplicates(Vec<String>),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("lambda search failed: {0}")]
    Tuning(String),

    #[error("active set did not stabilise after {rounds} enlargement rounds")]
    ActiveSet { rounds: usize },

    #[error("too many failed replicates: {failed} of {total}")]
    TooManyFailures { failed: usize, total: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical procedures themselves, as opposed
    /// to bad input data.
    pub fn is_convergence(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_) | Error::Tuning(_) | Error::ActiveSet { .. }
        )
    }
}
