use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("feature and label id sets differ; missing labels for {missing:?}, missing features for {unmatched:?}")]
    Mismatch {
        /// Feature ids without a label entry.
        missing: Vec<String>,
        /// Label ids without a feature row.
        unmatched: Vec<String>,
    },
    #[error("shape mismatch: expected {expected}, found {found} ({context})")]
    Shape { expected: usize, found: usize, context: &'static str },
    #[error("invalid group structure: {0}")]
    Group(String),
    #[error("vocabulary filter removed every word")]
    EmptyVocabulary,
    #[error("no themes left: every training row has an empty tfIdf vector")]
    NoThemes,
    #[error("prediction and truth image ids differ: {0:?}")]
    KeyMismatch(Vec<String>),
    #[error("word `{0}` is not a candidate for this image")]
    WordNotCandidate(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
}
