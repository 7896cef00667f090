use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate geometry: emitters {first} and {second} coincide")]
    DegenerateGeometry { first: usize, second: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("numerical consistency violated: {0}")]
    NumericalConsistency(String),

    #[error("evolution diverged: worst invariant violation {violation:.3e} ({what})")]
    EvolutionDiverged { violation: f64, what: String },

    #[error("no sensitivity: signal derivative vanishes on the whole detuning grid (tau = {tau})")]
    NoSensitivity { tau: f64 },

    #[error("singular coefficient: {0}")]
    SingularCoefficient(String),

    #[error("not realizable: {0}")]
    NotRealizable(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
