use thiserror::Error;

/// Errors returned by every fallible operation in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ApError {
    #[error("shape mismatch: expected (d={expected_d}, N={expected_n}), got (d={got_d}, N={got_n})")]
    ShapeMismatch {
        expected_d: usize,
        expected_n: usize,
        got_d: usize,
        got_n: usize,
    },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("matrix {name} is not invertible mod {modulus} (det = {det})")]
    SingularMatrix {
        name: &'static str,
        det: i64,
        modulus: usize,
    },
    #[error("resolution insufficient: {0}")]
    Resolution(String),
    #[error("quadrature did not converge: coarse = {coarse}, fine = {fine}")]
    NonConverged { coarse: f64, fine: f64 },
    #[error("divergent tail: {0}")]
    DivergentTail(String),
    #[error("input too large: {0}")]
    TooLarge(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for ApError {
    fn from(e: std::io::Error) -> Self {
        ApError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ApError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> ApError {
    ApError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
