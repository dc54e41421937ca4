use densesdp::{SdpError, SdpStatus};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not Hermitian (max |m - m†| = {0:e})")]
    NotHermitian(f64),
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("qubit index {index} out of range for {nqubits} qubits")]
    QubitOutOfRange { index: usize, nqubits: usize },
    #[error("invalid bipartition: {0}")]
    Bipartition(String),
    #[error("noise parameter s must be finite and nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("unsupported state: {0}")]
    UnsupportedState(String),
    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("{0}")]
    Argument(String),
    #[error("semidefinite program rejected: {0}")]
    Sdp(#[from] SdpError),
    #[error("solver stopped with status {status} (primal {primal_objective:.3e}, dual {dual_objective:.3e})")]
    SolverFailed {
        status: SdpStatus,
        primal_objective: f64,
        dual_objective: f64,
    },
    #[error("{excluded} of {count} realizations excluded (limit is below 5%)")]
    TooManyExclusions { excluded: usize, count: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
