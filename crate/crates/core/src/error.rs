use std::path::PathBuf;

/// Errors raised by the analysis library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("band {low}-{high} Hz must satisfy 0 < low < high < {nyquist} Hz")]
    BandOutsideNyquist { low: f64, high: f64, nyquist: f64 },

    #[error("zero standard deviation in {0}")]
    ZeroStd(&'static str),

    #[error("epoch {index} out of range (epoch count {count})")]
    EpochOutOfRange { index: usize, count: usize },

    #[error("recording too short: {seconds:.3} s is below one 30 s epoch")]
    TooShort { seconds: f64 },

    #[error("at least 2 scorers required, got {0}")]
    TooFewScorers(usize),

    #[error("sampling rate {0} Hz is too low for 35 Hz content (need >= 80 Hz)")]
    SamplingRateTooLow(f64),

    #[error("probability grids differ")]
    GridMismatch,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
