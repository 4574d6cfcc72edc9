use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: String },

    /// A coherent state (or a weighted family of them) does not fit in the
    /// requested Fock cutoff.
    #[error(
        "coherent amplitude |{amp:.4}| loses {loss:.3e} of its norm at dim {dim}; \
         at least {required} levels are needed"
    )]
    Truncation { amp: f64, dim: usize, loss: f64, required: usize },

    #[error("outside the domain of validity: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("undefined quantity: {0}")]
    Undefined(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
