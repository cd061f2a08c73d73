use std::path::PathBuf;

/// Errors raised by the pipeline stages and file I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("timestamp regression at record {record}: {t} < {previous}")]
    Order { record: usize, t: u64, previous: u64 },
    #[error("event at record {record} outside sensor bounds: ({x}, {y})")]
    Bounds { record: usize, x: u32, y: u32 },
    #[error("time {t} outside range [{start}, {end}]")]
    OutOfRange { t: u64, start: u64, end: u64 },
    #[error("track too short: {samples} samples, need at least 2")]
    TooShort { samples: usize },
    #[error("degenerate triangulation geometry")]
    DegenerateGeometry,
    #[error("triangulated point lies behind the camera")]
    BehindCamera,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("iterative and full maxima differ at event {index}")]
    EquivalenceFailure { index: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
