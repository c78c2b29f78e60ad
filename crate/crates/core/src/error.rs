use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("mode index {index:?} out of range (cutoff {cutoff:?})")]
    IndexOutOfRange { index: Vec<usize>, cutoff: Vec<usize> },

    #[error("point {point:?} lies outside the domain")]
    PointOutside { point: Vec<f64> },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("fields live on different domains")]
    DomainMismatch,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("operation requires dimension {required}, domain has dimension {actual}")]
    Dimension { required: &'static str, actual: usize },

    #[error("time step {dt} violates the CFL bound; admissible dt <= {admissible}")]
    Cfl { dt: f64, admissible: f64 },

    #[error("instability at t = {time}: energy grew from {before} to {after}")]
    Unstable { time: f64, before: f64, after: f64, state: Vec<f64> },

    #[error("truncation error estimate {estimate:.3e} exceeds 1% at t = {t}")]
    Truncation { t: f64, estimate: f64 },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// Configuration-class errors are reported with a distinct exit code by the CLI.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidDomain(_)
                | Error::IndexOutOfRange { .. }
                | Error::PointOutside { .. }
                | Error::ShapeMismatch { .. }
                | Error::DomainMismatch
                | Error::InvalidParameter { .. }
                | Error::Dimension { .. }
                | Error::Cfl { .. }
                | Error::Manifest(_)
        )
    }
}
