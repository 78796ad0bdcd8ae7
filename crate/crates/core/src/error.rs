use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("attribute `{attr}` has no value matching `{cell}`")]
    UnknownValue { attr: String, cell: String },
    #[error("attribute `{0}` does not fit its declared bit width")]
    WidthOverflow(String),
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("duplicate rows present and index prefixing is disabled")]
    DuplicateRows,
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("qubit index {index} out of range for {qubits} qubits")]
    IndexOutOfRange { index: usize, qubits: usize },
    #[error("M = {m} violates M < pi / arcsin(1/sqrt(n)) for n = {n}; largest admissible M is {limit}")]
    MTooLargeForPostLaplace { m: u64, n: u64, limit: u64 },
    #[error("angle sensitivity requires n >= 2, got {0}")]
    NTooSmall(u64),
    #[error("depolarizing probability p = 0 gives no privacy guarantee")]
    ZeroP,
    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),
    #[error("key length {key} does not match {qubits} qubits")]
    KeyLengthMismatch { key: usize, qubits: usize },
    #[error("unsupported gate {0}")]
    UnsupportedGate(String),
    #[error("negative or invalid privacy budget: epsilon = {epsilon}, delta = {delta}")]
    NegativeBudget { epsilon: f64, delta: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
