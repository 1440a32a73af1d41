use std::io;

use thiserror::Error;

use crate::wire::WireError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The requested computation needs more resources than configured.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// The Fock-space cutoff lost more probability than allowed.
    #[error("truncation error: kept probability {kept:.3e} at dim {dim}")]
    Truncation { dim: usize, kept: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error(transparent)]
    Wire(#[from] WireError),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
