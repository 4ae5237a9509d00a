use thiserror::Error;

use crate::state::SelectorKind;

/// Every failure the library can report.
///
/// Each variant maps onto a distinct process exit code through
/// [`Error::exit_code`], which the command-line front end relies on.
#[derive(Debug, Error)]
pub enum Error {
    #[error("state vector is identically zero")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value in input at index {index}")]
    NonFiniteInput { index: usize },

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("unknown waveform `{0}`")]
    UnknownWaveform(String),

    #[error("degenerate baseline P0 = {p0:e}: {} is (nearly) orthogonal to the state", describe_selector(.selector))]
    DegenerateBaseline {
        p0: f64,
        selector: Option<SelectorKind>,
    },

    #[error("singular quench depth {theta}: sin or 1-cos below 1e-9")]
    SingularDepth { theta: f64 },

    #[error("response map depths {depths:?} are not a single +theta/-theta pair")]
    IncompleteDepths { depths: Vec<f64> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for this error class. `0` is reserved for success and
    /// `2` for command-line usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 3,
            Error::Format(_) => 4,
            Error::InvalidParameter(_) => 5,
            Error::ZeroVector => 10,
            Error::DimensionMismatch { .. } => 11,
            Error::NonFiniteInput { .. } => 12,
            Error::IndexOutOfRange { .. } => 13,
            Error::UnknownWaveform(_) => 14,
            Error::DegenerateBaseline { .. } => 15,
            Error::SingularDepth { .. } => 16,
            Error::IncompleteDepths { .. } => 17,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Format(format!("csv: {other:?}")),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(e.into())
        } else {
            Error::Format(format!("json: {e}"))
        }
    }
}

fn describe_selector(s: &Option<SelectorKind>) -> String {
    match s {
        Some(kind) => format!("post-selector `{kind}`"),
        None => "the post-selector".to_string(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
