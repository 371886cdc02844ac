use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Malformed or inconsistent input (unknown vertex, duplicate name, ...).
    #[error("input error: {0}")]
    Input(String),
    /// A precondition on the shape of the input was violated.
    #[error("domain error: {0}")]
    Domain(String),
    /// The graph class has no exact procedure here; use the oracle.
    #[error("routed to oracle: {0}")]
    RoutedToOracle(String),
    /// A configured cap was exceeded.
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
