use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Which segment of a split a log argument or factorization belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Full,
    Left,
    Right,
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Segment::Full => f.write_str("full-sample"),
            Segment::Left => f.write_str("left"),
            Segment::Right => f.write_str("right"),
        }
    }
}

/// Pipeline stage used to label errors surfaced by [`crate::detector::detect`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Kurtosis,
    Profile,
    KernelGrid,
    Quantile,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Kurtosis => "kurtosis estimation",
            Stage::Profile => "profile construction",
            Stage::KernelGrid => "kernel grid",
            Stage::Quantile => "null quantile simulation",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("invalid segment {start}..={end}: need 1 <= start < end <= {n}")]
    InvalidSegment { start: usize, end: usize, n: usize },

    #[error("matrix is not positive definite (non-positive pivot at index {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("{segment} segment covariance is singular at split m={m} (pivot {pivot})")]
    SingularSplit { m: usize, segment: Segment, pivot: usize },

    #[error("split m={m} inadmissible for n={n}, p={p}: {segment} log argument {argument} is not positive")]
    Inadmissible {
        n: usize,
        p: usize,
        m: usize,
        segment: Segment,
        argument: f64,
    },

    #[error("kernel domain error: {0}")]
    KernelDomain(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("kernel covariance could not be factorized even with jitter {jitter:e}")]
    NumericalDegeneracy { jitter: f64 },

    #[error("{stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("row {row}: expected {expected} cells, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column {col}: cannot parse {cell:?} as a number")]
    NonNumeric { row: usize, col: usize, cell: String },

    #[error("too few observations: n={n} must exceed 2p+4={bound} for p={p}")]
    TooFewRows { n: usize, p: usize, bound: usize },

    #[error("csv error: {0}")]
    Csv(String),
}

impl Error {
    pub(crate) fn at(self, stage: Stage) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, stripping stage labels.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
