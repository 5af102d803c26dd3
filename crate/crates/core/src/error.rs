use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the core computations.
///
/// File-level failures (missing files, malformed lines) live in the IO crate;
/// these variants describe violated preconditions on in-memory data.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("duplicate mood term `{0}`")]
    DuplicateTerm(String),
    #[error("invalid mood term `{term}`: {reason}")]
    InvalidMood { term: String, reason: &'static str },
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },
    #[error("undefined marginal for ({song}, {mood}): {which} count is zero")]
    UndefinedMarginal {
        song: String,
        mood: String,
        which: &'static str,
    },
    #[error("degenerate denominator for ({song}, {mood})")]
    DegenerateDenominator { song: String, mood: String },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("labels contain a single class")]
    DegenerateLabels,
    #[error("non-finite feature value in row {row}")]
    NonFiniteFeature { row: usize },
    #[error("test-set leakage: song `{0}` belongs to the test split")]
    Leakage(String),
    #[error("ragged embedding for song `{song}`: expected dimension {expected}, got {got}")]
    RaggedEmbedding {
        song: String,
        expected: usize,
        got: usize,
    },
    #[error("missing predictions for {} pair(s), first: {:?}", .0.len(), .0.first())]
    MissingPredictions(Vec<(String, String)>),
    #[error("unresolved disagreement for ({song}, {mood})")]
    UnresolvedDisagreement { song: String, mood: String },
    #[error("invalid annotation record for ({song}, {mood}): {reason}")]
    InvalidAnnotation {
        song: String,
        mood: String,
        reason: &'static str,
    },
    #[error("ragged rating matrix: item {item} has {got} ratings, expected {expected}")]
    RaggedRatings {
        item: usize,
        expected: usize,
        got: usize,
    },
    #[error("infeasible simulation config: {0}")]
    InfeasibleConfig(String),
}

impl Error {
    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}
