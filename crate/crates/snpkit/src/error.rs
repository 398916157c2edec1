use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("undeclared symbol `{0}`")]
    UndeclaredSymbol(String),

    #[error("symbol `{name}` has arity {expected}, used with {found} arguments")]
    ArityMismatch { name: String, expected: usize, found: usize },

    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("budget exceeded during {stage}: {resource} limit {limit}")]
    Budget { stage: String, resource: &'static str, limit: u64 },

    #[error("internal inconsistency: {0}")]
    Internal(String),
}

impl Error {
    pub fn parse(line: usize, col: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, col, msg: msg.into() }
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget { .. })
    }
}
