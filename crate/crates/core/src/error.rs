use thiserror::Error;

/// Errors raised by the samplers, counters and experiment drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} exceeded its budget of {budget}")]
    BudgetExceeded { what: &'static str, budget: u64 },

    /// The requested test cannot separate the two models: below the
    /// threshold `(a-b)^2 <= 2(a+b)` the planted and null models are
    /// mutually contiguous.
    #[error(
        "indistinguishable regime: (a-b)^2 = {lhs} <= 2(a+b) = {rhs}; \
         the planted and Erdos-Renyi models are mutually contiguous"
    )]
    Indistinguishable { lhs: f64, rhs: f64 },

    #[error("observation mismatch: {0}")]
    ObservationMismatch(String),

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
