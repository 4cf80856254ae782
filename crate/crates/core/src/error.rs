use thiserror::Error;

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("register of {requested} qubits exceeds the maximum of {max}")]
    RegisterOverflow { requested: usize, max: usize },
    #[error("qubit index {index} out of range for a {num_qubits}-qubit register")]
    InvalidQubit { index: usize, num_qubits: usize },
    #[error("qubit index {0} listed more than once")]
    DuplicateQubit(usize),
    #[error("qubit selection must not be empty")]
    EmptySelection,
    #[error("expected {expected} amplitudes or entries, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("non-finite value in state or matrix")]
    NonFinite,
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("density matrix trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("density matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("invalid angle: {0}")]
    InvalidAngle(String),
    #[error("Bell outcome {outcome} is not admissible in {mode} mode")]
    ModeMismatch { outcome: String, mode: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("insufficient data in cell {cell}")]
    InsufficientData { cell: String },
    #[error("no closed-form prediction for outcome {0}")]
    UndefinedPrediction(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
}
