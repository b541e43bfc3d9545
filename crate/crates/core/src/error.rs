use thiserror::Error;

pub type Result<T> = std::result::Result<T, KyleError>;

#[derive(Debug, Error)]
pub enum KyleError {
    #[error("ParseError: {0}")]
    Parse(String),

    #[error("ValidationError: {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("DomainError: t = {t} outside [{lo}, {hi}]")]
    Domain { t: f64, lo: f64, hi: f64 },

    #[error("BlowUpError: {quantity} = {value} left its admissible range at t = {t}")]
    BlowUp {
        quantity: &'static str,
        t: f64,
        value: f64,
    },

    #[error("LengthMismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("NotApplicable: {0}")]
    NotApplicable(String),

    #[error("DegenerateError: {0}")]
    Degenerate(String),

    #[error("SingularCovariance: {0}")]
    SingularCovariance(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl KyleError {
    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        KyleError::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by the user's input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            KyleError::Parse(_)
                | KyleError::Validation { .. }
                | KyleError::NotApplicable(_)
                | KyleError::Domain { .. }
                | KyleError::Io(_)
        )
    }
}

impl From<serde_json::Error> for KyleError {
    fn from(e: serde_json::Error) -> Self {
        KyleError::Parse(e.to_string())
    }
}
