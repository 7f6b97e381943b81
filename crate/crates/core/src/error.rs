//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for a {qubits}-qubit register")]
    QubitOutOfRange { index: usize, qubits: usize },

    #[error("gate targets must be distinct, got {0:?}")]
    DuplicateTargets(Vec<usize>),

    #[error("a {requested}-qubit register exceeds the cap of {cap} qubits (set {env} to raise it)", env = crate::QUBIT_CAP_ENV)]
    QubitCapExceeded { requested: usize, cap: usize },

    #[error("expected a {expected}-qubit object, got {actual} qubits")]
    QubitCountMismatch { expected: usize, actual: usize },

    #[error("basis index {index} out of range for {qubits} qubits")]
    BasisOutOfRange { index: u64, qubits: usize },

    #[error("key set holds {actual} pairs, expected {expected}")]
    KeyLength { expected: usize, actual: usize },

    #[error("key bits must be 0 or 1, got ({a}, {b})")]
    KeyBitRange { a: u8, b: u8 },

    #[error("gate {0} has no key-update rule outside the tracked Clifford set")]
    NonClifford(String),

    #[error("gate {0} is not accepted in a delegated evaluation circuit; decompose it first")]
    UnsupportedEvalGate(String),

    #[error("gate {0} has no fixed decomposition; only TOFFOLI and CSWAP decompose")]
    NoDecomposition(String),

    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("cannot amplitude-encode a zero vector")]
    ZeroVector,

    #[error("amplitude vector length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("value table misses index {0}")]
    MissingTableIndex(String),

    #[error("value table entry {index} = {value} exceeds declared max {max}")]
    TableValueOverflow { index: String, value: u64, max: u64 },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Convenience constructor for free-form input validation failures.
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
