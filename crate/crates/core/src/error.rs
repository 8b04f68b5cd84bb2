use thiserror::Error;

use crate::sdp::SdpDiagnostics;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("bipartition is for {mask} qubits but the state has {state}")]
    MaskMismatch { mask: usize, state: usize },

    #[error("invalid bipartition mask {mask:#b} for {n_qubits} qubits")]
    InvalidMask { mask: u32, n_qubits: usize },

    #[error("field orientation ({0}, {1}, {2}) is not a unit vector")]
    NotUnitVector(f64, f64, f64),

    #[error("time {t} lies outside the tabulated characteristic function grid [0, {max}]")]
    OutOfGrid { t: f64, max: f64 },

    #[error("invalid spectral distribution: {0}")]
    InvalidSpectrum(String),

    #[error("Toeplitz dephasing matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    ToeplitzNotPositive { min_eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("parameter {name} = {value} is outside [0, 1]")]
    ParamOutOfRange { name: &'static str, value: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("closed-form evolution is only defined for the z-axis field")]
    NotZAxis,

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("empty time grid")]
    EmptyGrid,

    #[error("time grid is not ascending")]
    UnsortedGrid,

    #[error("operator for qubit {qubit} is not unitary (deviation {deviation:e})")]
    NotUnitary { qubit: usize, deviation: f64 },

    #[error("SDP solver failed: {0}")]
    SolverFailed(Box<SdpDiagnostics>),

    #[error("malformed SDP problem: {0}")]
    MalformedProblem(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Failures of the computation itself, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SolverFailed(_) | Error::ToeplitzNotPositive { .. } | Error::NotHermitian { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
