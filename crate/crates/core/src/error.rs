use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by every stage of the toolkit.
///
/// Variants fall into three families (configuration, data, numerical) that
/// the command-line front end maps onto distinct exit codes via
/// [`Error::kind`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed CSV: {message}")]
    Malformed { path: PathBuf, message: String },

    #[error("duplicate date {date} for ticker {ticker}")]
    DuplicateDate { ticker: String, date: String },

    #[error("dates are not strictly increasing at {0}")]
    UnsortedDates(String),

    #[error("months are not strictly increasing at {0}")]
    UnsortedMonths(String),

    #[error("EPU value for {month} must be positive, got {value}")]
    NonPositiveEpu { month: String, value: f64 },

    #[error("every ticker was dropped by cleaning")]
    EmptyPanel,

    #[error("unresolved missing price for {ticker} on {date}")]
    UnresolvedMissing { ticker: String, date: String },

    #[error("missing sector tag for ticker {0}")]
    MissingSector(String),

    #[error("no EPU value for month {0}")]
    MissingMonth(String),

    #[error("series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("kernel window at index {t} has fewer than two weighted observations; increase the bandwidth")]
    EmptyWindow { t: usize },

    #[error("empty regression neighbourhood at index {t} (y = {y}); increase the bandwidth")]
    EmptyNeighbourhood { t: usize, y: f64 },

    #[error("{op}: {message}")]
    Domain { op: &'static str, message: String },

    #[error("pair ({a}, {b}): {source}")]
    Pair {
        a: String,
        b: String,
        #[source]
        source: Box<Error>,
    },

    #[error("infeasible edge counts: {0}")]
    Infeasible(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("walk series truncated at {truncation} terms leaves tail bound {bound:e} >= 1e-12")]
    Truncation { truncation: usize, bound: f64 },

    #[error("stage `{stage}` failed on {input}: {source}")]
    Stage {
        stage: &'static str,
        input: String,
        #[source]
        source: Box<Error>,
    },
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

impl Error {
    pub fn domain(op: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            op,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn malformed(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn in_stage(self, stage: &'static str, input: impl Into<String>) -> Self {
        Error::Stage {
            stage,
            input: input.into(),
            source: Box::new(self),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Eigen(_) | Error::Truncation { .. } => ErrorKind::Numerical,
            Error::Pair { source, .. } | Error::Stage { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }
}
