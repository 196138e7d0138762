use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("no tensor factor labelled `{0}`")]
    UnknownFactor(String),

    #[error("invalid tensor space: {0}")]
    InvalidSpace(String),

    #[error("truncation tail {tail:.3e} exceeds {limit:.1e} ({what}); raise the Fock dimension")]
    Truncation { what: String, tail: f64, limit: f64 },

    #[error(
        "amplitude |r| = {amplitude:.3} needs Fock dimension >= {required:.0}, got {dim}; raise the truncation"
    )]
    Headroom { amplitude: f64, dim: usize, required: f64 },

    #[error("off resonance: {0}")]
    OffResonance(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("norm drift {drift:.3e} exceeds {limit:.1e}; retry with max step below {suggested_step:.3e} s")]
    Accuracy { drift: f64, limit: f64, suggested_step: f64 },

    #[error("measurement outcome has probability {0:.3e}; collapse undefined")]
    ZeroProbability(f64),

    #[error("operator is not Hermitian (relative defect {0:.3e})")]
    NotHermitian(f64),

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
