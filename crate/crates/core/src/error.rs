use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric (max relative asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite even with jitter {max_jitter:e}")]
    NotPositiveDefinite { max_jitter: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty data")]
    EmptyData,

    #[error("m must be ≥ 2 (got {0})")]
    TooFewKnots(usize),

    #[error("invalid bounds: lower {lb} must be below upper {ub}")]
    BadBounds { lb: f64, ub: f64 },

    #[error("point at row {row} lies outside the knot grid")]
    PointOutsideGrid { row: usize },

    #[error("parameter {name} must be strictly positive (got {value})")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("predictive variance {value:e} at index {index} is below the clamping tolerance")]
    NegativeVariance { index: usize, value: f64 },

    #[error("restart {restart} failed: {source}")]
    RestartFailed {
        restart: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("all {0} restarts failed")]
    AllRestartsFailed(usize),

    #[error("cannot read {path}: {message}")]
    FileUnreadable { path: PathBuf, message: String },

    #[error("cannot write {path}: {message}")]
    FileUnwritable { path: PathBuf, message: String },

    #[error("length mismatch: {inputs} inputs vs {outputs} outputs")]
    LengthMismatch { inputs: usize, outputs: usize },

    #[error("non-numeric token {token:?} at line {line}")]
    NonNumericToken { line: usize, token: String },

    #[error("missing column {0:?}")]
    MissingColumn(String),

    #[error("empty file {0}")]
    EmptyFile(PathBuf),

    #[error("invalid sampling box: {0}")]
    BadBox(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Coarse failure class, used by the command line front end to pick an exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_)
            | Error::InvalidSpec(_)
            | Error::TooFewKnots(_)
            | Error::BadBounds { .. }
            | Error::BadBox(_)
            | Error::NonPositiveParameter { .. } => ErrorKind::Config,
            Error::EmptyData
            | Error::PointOutsideGrid { .. }
            | Error::FileUnreadable { .. }
            | Error::FileUnwritable { .. }
            | Error::LengthMismatch { .. }
            | Error::NonNumericToken { .. }
            | Error::MissingColumn(_)
            | Error::EmptyFile(_)
            | Error::DimensionMismatch(_) => ErrorKind::Data,
            Error::RestartFailed { source, .. } => source.kind(),
            Error::NotSymmetric(_)
            | Error::NotPositiveDefinite { .. }
            | Error::NonFinite(_)
            | Error::NegativeVariance { .. }
            | Error::AllRestartsFailed(_) => ErrorKind::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
