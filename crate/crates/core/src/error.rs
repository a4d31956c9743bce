use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum MorError {
    #[error("pencil sE - A is singular or numerically singular at s = {re} + {im}i")]
    SingularPencil { re: f64, im: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("decomposition failed: {0}")]
    DecompositionFailure(String),

    #[error("error function is unbounded on the imaginary axis (sample {value:e} at omega = {omega})")]
    Unbounded { omega: f64, value: f64 },

    #[error("no finite sample of the error function was obtained")]
    NoFinite,

    #[error("invalid bracket [{lo}, {hi}] for peak refinement")]
    BracketInvalid { lo: f64, hi: f64 },

    #[error("objective evaluated to a non-finite value")]
    NonFiniteObjective,

    #[error("point is infeasible: spectral abscissa {alpha} >= bound {beta}")]
    Infeasible { alpha: f64, beta: f64 },

    #[error("system is not asymptotically stable (spectral abscissa {0})")]
    UnstableSystem(f64),

    #[error("E is singular; operation requires an invertible E")]
    SingularE,

    #[error("eigenvector matrix is ill-conditioned (condition estimate {0:e})")]
    DefectiveEigenstructure(f64),

    #[error("initialization failed: {0}")]
    InitFailure(String),

    #[error("maximum number of outer iterations ({0}) exceeded")]
    MaxOuterExceeded(usize),

    #[error("{file}:{line}: {reason}")]
    ParseError {
        file: String,
        line: usize,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MorError>;
