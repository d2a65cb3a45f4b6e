use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("element {value} out of range for domain of size {size}")]
    OutOfRange { value: usize, size: usize },

    #[error("arity mismatch: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("domain mismatch: {0} vs {1}")]
    DomainMismatch(usize, usize),

    #[error("malformed input: {0}")]
    Shape(String),

    #[error("unknown name `{0}`")]
    Unknown(String),

    #[error("unbound variable `{0}`")]
    Unbound(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("precondition failed: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Self {
        Error::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    /// True for errors that mean "ran out of budget" rather than "bad input".
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
