use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected}, found {found}")]
    Shape {
        op: &'static str,
        expected: String,
        found: String,
    },
    #[error("non-finite gradient for parameter `{param}`")]
    NonFinite { param: String },
    #[error("target of {required} required frames does not fit in {frames} frames")]
    Infeasible { frames: usize, required: usize },
    #[error("instance too large for enumeration: {0}")]
    TooLarge(String),
    #[error("token {token} outside vocabulary of size {vocab}")]
    Vocab { token: usize, vocab: usize },
    #[error("usage: {0}")]
    Usage(String),
    #[error("clustering: {0}")]
    Clustering(String),
    #[error("config: {0}")]
    Config(String),
    #[error("training: {0}")]
    Training(String),
    #[error("contract violation: {0}")]
    Contract(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn shape_err(op: &'static str, expected: impl Into<String>, found: impl Into<String>) -> Error {
    Error::Shape {
        op,
        expected: expected.into(),
        found: found.into(),
    }
}
