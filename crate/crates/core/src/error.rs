use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// One pair of labeled diagrams that could not be compared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncomparablePair {
    pub left: String,
    pub right: String,
    pub dim: usize,
    pub left_infinite: usize,
    pub right_infinite: usize,
}

#[derive(Error, Debug)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("corpus is empty after filtering")]
    EmptyCorpus,

    #[error("no token reaches min_count = {min_count}")]
    EmptyVocabulary { min_count: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("simplex budget exceeded: {count} simplices at eps = {eps} (budget {budget}); lower max_eps, max_dim or the point count")]
    BudgetExceeded { count: usize, budget: usize, eps: f64 },

    #[error("unsupported request: {0}")]
    Unsupported(String),

    #[error(
        "incomparable diagrams in dimension {dim}: {left} vs {right} infinite bars"
    )]
    Incomparable { dim: usize, left: usize, right: usize },

    #[error("{} incomparable diagram pair(s): {}", .0.len(), describe_pairs(.0))]
    IncomparablePairs(Vec<IncomparablePair>),

    #[error("mean over group '{0}' is undefined (fewer than two members)")]
    UndefinedMean(String),

    #[error("graph generation failed: {0}")]
    Generation(String),

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error("manifest validation failed: {0}")]
    Validation(String),

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

fn describe_pairs(pairs: &[IncomparablePair]) -> String {
    pairs
        .iter()
        .map(|p| {
            format!(
                "({}, {}) dim {}: {} vs {}",
                p.left, p.right, p.dim, p.left_infinite, p.right_infinite
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format { what, detail: detail.into() }
    }

    /// Whether the error stems from a bad manifest or bad configuration
    /// rather than from a failure while running.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Validation(_) => true,
            Error::Stage { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::format("csv", err.to_string())
    }
}
