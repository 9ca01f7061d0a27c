use thiserror::Error;

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: must satisfy {bound}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        bound: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("grid horizon {grid} does not match model horizon {model}")]
    HorizonMismatch { grid: f64, model: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature failed on panel [{lo}, {hi}]: {reason}")]
    Quadrature { lo: f64, hi: f64, reason: String },

    #[error("requested tolerance {requested:e} not reached (estimated error {estimated:e})")]
    Tolerance { requested: f64, estimated: f64 },

    #[error("spectral cutoff too small: estimated error {estimated:e} exceeds tolerance {tolerance:e}")]
    SpectralCutoff { estimated: f64, tolerance: f64 },

    #[error("circulant embedding failed: minimum eigenvalue {min_eigenvalue:e} vs maximum {max_eigenvalue:e}")]
    Embedding {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("Cholesky factorization failed at leading minor {minor}")]
    Factorization { minor: usize },

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("zero denominator: {0}")]
    ZeroDenominator(String),

    #[error("batch format: {0}")]
    Format(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_param(name: &'static str, value: f64, ok: bool, bound: &'static str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value, bound })
    }
}
