use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("ground truth unavailable: field has no target coordinates")]
    GroundTruthUnavailable,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("at least two items are required for pair enumeration, got {0}")]
    EmptyEnumeration(usize),

    #[error("underdetermined fit: need at least 2 points, got {0}")]
    Underdetermined(usize),

    #[error("empty problem: {0}")]
    EmptyProblem(&'static str),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("sample index {index} out of range: link {tx}->{rx} has {available} retained records")]
    SampleOutOfRange {
        index: usize,
        tx: String,
        rx: String,
        available: usize,
    },

    #[error("{0}")]
    Parse(#[from] ParseReport),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// One malformed line in an input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

/// All problems found while parsing a file, in line order.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseReport {
    pub source_name: String,
    pub errors: Vec<LineError>,
}

impl std::fmt::Display for ParseReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} parse error(s) in {}", self.errors.len(), self.source_name)?;
        for e in &self.errors {
            write!(f, "\n  {}:{}: {}", self.source_name, e.line, e.message)?;
        }
        Ok(())
    }
}
