use thiserror::Error;

/// Errors produced by circuit construction, simulation and problem generation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("gate position {position} out of range (circuit has {len} gates)")]
    PositionOutOfRange { position: usize, len: usize },

    #[error("CNOT control and target must differ (both {qubit})")]
    DegenerateCnot { qubit: usize },

    #[error("dimension mismatch: state has {state_qubits} qubits, energies cover {energy_qubits}")]
    DimensionMismatch {
        state_qubits: usize,
        energy_qubits: usize,
    },

    #[error("{context}: {n} variables exceeds enumeration bound of {bound}")]
    CapacityExceeded {
        context: &'static str,
        n: usize,
        bound: usize,
    },

    #[error("malformed gene: {0}")]
    MalformedGene(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("metric {0} not present in summary")]
    MissingMetric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
