use thiserror::Error;

/// Errors produced by the numerical kernels and protocol synthesis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),

    /// The requested transformation is not achievable. `p_max` is attached
    /// whenever it is known.
    #[error("infeasible: {reason}")]
    Infeasible { reason: String, p_max: Option<f64> },

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible {
            reason: msg.into(),
            p_max: None,
        }
    }

    /// Short machine-readable tag, used in JSON error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::UnsupportedShape(_) => "unsupported-shape",
            Error::Infeasible { .. } => "infeasible",
            Error::NumericalDegeneracy(_) => "numerical-degeneracy",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
