use thiserror::Error;

use crate::montecarlo::DipCurve;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("pulse cap of {cap} pulses reached at delay {delay_ps} ps after {starts} starts")]
    PulseCap {
        cap: u64,
        delay_ps: f64,
        starts: u64,
        partial: Box<DipCurve>,
    },

    #[error("scenario error: {0}")]
    Schema(String),

    #[error("malformed curve data at row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
