use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("matrix is singular")]
    Singular,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("scale error: {0}")]
    Scale(String),

    #[error("LP is unbounded")]
    Unbounded,

    #[error("LP start point is infeasible: {0}")]
    InfeasibleStart(String),

    #[error("no hyperplane: points affinely span the whole space")]
    NoHyperplane,

    #[error("no separating cut found for vertex")]
    NotSeparated,

    #[error("denominator reduction stuck; neighbor max-denominator census {census:?}")]
    ReductionStuck { census: Vec<(u64, usize)> },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
