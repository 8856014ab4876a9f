use thiserror::Error;

/// Errors produced by the model, transform and estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested table would need more than 2^30 cells.
    #[error("capacity error: {variables} variables exceed the supported maximum of {max}")]
    Capacity { variables: usize, max: usize },

    /// An exact integer result does not fit into 64 bits.
    #[error("overflow: {0}")]
    Overflow(String),

    /// The parameter cannot be recovered from the data supplied.
    #[error("not identifiable: {0}")]
    NonIdentifiable(String),

    /// The operation has no implementation for the given configuration.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A two-by-two dependence measure has a zero denominator.
    #[error("measure `{measure}` is undefined: {reason}")]
    Undefined {
        measure: &'static str,
        reason: &'static str,
    },

    /// A round trip produced an output that violates its own invariants.
    #[error("inconsistent result: {0}")]
    Inconsistent(String),

    /// A floating point computation produced a non-finite value.
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
