use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("inconsistent presentation: {0}")]
    Inconsistent(String),

    #[error("collection ran out of fuel after {steps} rewrite steps")]
    FuelExhausted { steps: u64 },

    #[error("vertex budget of {cap} exceeded while building radius {radius}")]
    VertexBudget { cap: usize, radius: usize },

    #[error("precondition failed ({what}): {detail}")]
    Precondition { what: &'static str, detail: String },

    #[error("enumeration cap of {cap} exceeded ({partial} found so far)")]
    CapExceeded { cap: usize, partial: usize },

    #[error("unknown group family `{0}`")]
    UnknownFamily(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("element is not a vertex of the ball: {0}")]
    NotInBall(String),

    #[error("vertex map rejected: {0}")]
    BadVertexMap(String),

    #[error("analytic cross-check disagrees: {0}")]
    AnalyticDisagreement(String),
}

impl Error {
    pub(crate) fn precondition(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Precondition {
            what,
            detail: detail.into(),
        }
    }
}
