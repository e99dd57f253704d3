use alloc::string::String;

/// Errors raised by the relaxation toolkit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A point does not belong to the set it is evaluated on.
    #[error("point outside domain: {0}")]
    Domain(String),

    /// A kernel or feature matrix is too ill-conditioned to be used.
    #[error("ill-conditioned: {0}")]
    Conditioning(String),

    /// A matrix expected to be positive semidefinite is not.
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    /// Operand sizes do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The set kind and degree cannot be combined.
    #[error("unsupported set: {0}")]
    Unsupported(String),

    /// The semidefinite program could not be solved to optimality.
    #[error("solver failed: {0}")]
    Solver(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
