use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} lies outside [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("{context} is ill-conditioned (reciprocal condition number {rcond:e})")]
    Conditioning { context: &'static str, rcond: f64 },

    #[error(
        "characteristic determinant (almost) vanishes on the contour near {lambda}; \
         move the rectangle edges slightly"
    )]
    ZeroOnContour { lambda: Complex64 },

    #[error("trace construction failed: {0}")]
    Construction(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Integration { .. }
                | Error::Conditioning { .. }
                | Error::ZeroOnContour { .. }
                | Error::Construction(_)
        )
    }

    /// Name of the offending field or invariant, for machine-readable reports.
    pub fn field(&self) -> &str {
        match self {
            Error::Domain { what, .. } => what,
            Error::Invalid { field, .. } => field,
            Error::Dimension { context, .. } => context,
            Error::Integration { .. } => "integration",
            Error::Conditioning { context, .. } => context,
            Error::ZeroOnContour { .. } => "rectangle",
            Error::Construction(_) => "construct_with_traces",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
