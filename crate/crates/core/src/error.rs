use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix data has {len} entries, which is not a positive perfect square")]
    NotSquare { len: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("matrix is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not normal (residual ||M^dag M - M M^dag||_F = {residual:e})")]
    NotNormal { residual: f64 },

    #[error("Hermitian parts do not commute (||[C, D]||_F = {residual:e})")]
    NotCommuting { residual: f64 },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("relabeling covers {found} eigenspaces, observable has {expected}")]
    IncompleteRelabeling { expected: usize, found: usize },

    #[error("eigenspaces {first} and {second} would share the label {label}")]
    DuplicateLabels {
        first: usize,
        second: usize,
        label: String,
    },

    #[error("eigenspace index {index} out of range ({count} eigenspaces)")]
    EigenspaceOutOfRange { index: usize, count: usize },

    #[error("branch {index} has probability {probability:e}; cannot collapse onto it")]
    ZeroProbabilityBranch { index: usize, probability: f64 },

    #[error("observable {name} is not Hermitian with square equal to identity")]
    NotHermitianUnitary { name: &'static str },

    #[error("Jacobi eigensolver did not converge in {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("invalid outcome alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
