use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Every variant maps onto a stable name (see [`Error::name`]) that the CLI
/// and the C ABI report verbatim.
#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("drift evaluated on its singular point x = {x} at t = {t}")]
    SingularPoint { t: f64, x: f64 },

    #[error("step refinement exhausted near t = {t} (x = {x}, step = {step:e})")]
    StepUnderflow { t: f64, x: f64, step: f64 },

    #[error("solution forced across the barrier at {barrier} (t = {t}, x = {x})")]
    SideViolation { t: f64, x: f64, barrier: f64 },

    #[error("non-finite value at t = {t}")]
    NonFinite { t: f64 },

    #[error("driver increment {increment} is within the guard of a branch boundary")]
    DegenerateIncrement { increment: f64 },

    #[error("forced branch is invalid: X_2 = {x2} lies in [-1, 1]")]
    InvalidBranch { x2: f64 },

    #[error("junction mismatch of {gap} at t = {t}")]
    JunctionMismatch { t: f64, gap: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// Stable identifier of the variant.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Usage(_) => "Usage",
            Error::SingularPoint { .. } => "SingularPoint",
            Error::StepUnderflow { .. } => "StepUnderflow",
            Error::SideViolation { .. } => "SideViolation",
            Error::NonFinite { .. } => "NonFinite",
            Error::DegenerateIncrement { .. } => "DegenerateIncrement",
            Error::InvalidBranch { .. } => "InvalidBranch",
            Error::JunctionMismatch { .. } => "JunctionMismatch",
            Error::Io(_) => "Io",
            Error::Parse(_) => "Parse",
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
