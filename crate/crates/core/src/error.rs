use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("qubit {0} out of range")]
    QubitOutOfRange(usize),
    #[error("dense state limited to {max} qubits, got {got}")]
    TooManyQubits { got: usize, max: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("forced outcome {outcome} on qubit {qubit} has zero probability")]
    ImpossibleOutcome { qubit: usize, outcome: i8 },
    #[error("operation is not Clifford: {0}")]
    NonClifford(String),
    #[error("unsupported on this backend: {0}")]
    Unsupported(String),
    #[error("wrong topology: {0}")]
    Topology(String),
    #[error("malformed schedule: {0}")]
    Schedule(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
