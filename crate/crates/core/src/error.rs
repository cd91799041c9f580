use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Two objects that must agree in shape do not.
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    Dimension {
        context: &'static str,
        expected: String,
        found: String,
    },

    /// A scalar or vector entry is NaN or infinite.
    #[error("non-finite value in {field} at index {index}")]
    NonFinite { field: &'static str, index: usize },

    /// A problem field is inconsistent with another field.
    #[error("inconsistent {field} at index {index}: {reason}")]
    Inconsistent {
        field: &'static str,
        index: usize,
        reason: String,
    },

    /// A parameter is outside its admissible range.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The point violates the infinity-norm constraint of the completion objective.
    #[error("infeasible point: ||B||_inf = {norm} exceeds radius {radius}")]
    Infeasible { norm: f64, radius: f64 },

    /// A desk-scale diagnostic was asked to run above its size limit.
    #[error("{what} limited to {limit}, got {found}")]
    TooLarge {
        what: &'static str,
        limit: String,
        found: String,
    },

    /// A matrix factorisation did not produce usable factors.
    #[error("decomposition failed: {0}")]
    Decomposition(&'static str),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: impl ToDisplay, found: impl ToDisplay) -> Self {
        Error::Dimension {
            context,
            expected: expected.to_display(),
            found: found.to_display(),
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) trait ToDisplay {
    fn to_display(&self) -> String;
}

impl<T: core::fmt::Display> ToDisplay for T {
    fn to_display(&self) -> String {
        alloc::format!("{self}")
    }
}

/// Formats a matrix shape as `rows x cols`.
pub(crate) fn shape(rows: usize, cols: usize) -> String {
    alloc::format!("{rows}x{cols}")
}
