use alloc::string::String;

/// Errors raised by the solver library.
///
/// Verdicts (infeasible, optimal, invalid presentation) are never errors;
/// these variants cover malformed input and exhausted search budgets.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("{what} exceeds limit {limit}")]
    TooLarge { what: &'static str, limit: u64 },
    #[error("budget exhausted: {what} (limit {limit})")]
    Budget { what: &'static str, limit: u64 },
    #[error("objective is unbounded along an improving direction")]
    Unbounded,
    #[error("brick set is not finite: {0}")]
    InfiniteBrickSet(String),
    #[error("internal consistency: {0}")]
    Internal(String),
}

impl Error {
    /// Budget and size-limit errors; callers report these as "undecided".
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget { .. } | Error::TooLarge { .. })
    }
}

pub type Result<T> = core::result::Result<T, Error>;
