use thiserror::Error;

/// Errors produced by the simulator, optimizer and data tooling.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid caller input (non-finite values, unreachable stick separation, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// The geometry collapsed so far that the requested quantity is ill-defined.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// A trajectory was queried outside of its time span.
    #[error("time {t} outside trajectory span [{start}, {end}]")]
    Range { t: f64, start: f64, end: f64 },

    /// A waypoint could not be matched to any remaining rollout state.
    #[error("waypoint {index} has no remaining time window to match against")]
    Match { index: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    /// Malformed trace file.
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("unknown goal pattern `{0}`")]
    UnknownPattern(String),

    #[error("environment not reset: {0}")]
    NotReset(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
