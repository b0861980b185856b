use alloc::string::String;

/// Errors surfaced by the computation pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A required collection (rows, tickers, weights) was empty.
    EmptyInput(String),
    /// Fewer observations than the operation needs.
    InsufficientData {
        context: String,
        required: usize,
        available: usize,
    },
    /// Arguments violate a precondition (bad k, reversed window, shape mismatch).
    InvalidInput { field: String, reason: String },
    /// Data values violate an invariant (non-positive price, all-missing ticker,
    /// zero-variance column).
    Data(String),
    /// A computation degenerated: singular system, zero variance in a
    /// denominator, domain error.
    Numeric(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl core::fmt::Display for Error {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Error::EmptyInput(what) => write!(f, "empty input: {what}"),
            Error::InsufficientData {
                context,
                required,
                available,
            } => write!(
                f,
                "insufficient data for {context}: required {required}, available {available}"
            ),
            Error::InvalidInput { field, reason } => {
                write!(f, "invalid input `{field}`: {reason}")
            }
            Error::Data(reason) => write!(f, "data error: {reason}"),
            Error::Numeric(reason) => write!(f, "numeric error: {reason}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
