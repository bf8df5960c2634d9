use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {malformed} of {total} lines malformed (limit is 10%)")]
    TooManyMalformed {
        path: PathBuf,
        malformed: usize,
        total: usize,
    },

    #[error("corpus too sparse for thresholds: {0}")]
    CorpusTooSparse(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("requested rank {k} exceeds min dimension {min_dim}")]
    RankTooLarge { k: usize, min_dim: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("rank deficient input: {0}")]
    RankDeficient(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training diverged at epoch {epoch}: loss {loss:.6e} exceeds 10x initial {initial:.6e}")]
    Diverged { epoch: usize, loss: f64, initial: f64 },

    #[error("degenerate topic {topic}: lists A and B overlap")]
    DegenerateTopic { topic: usize },

    #[error("insufficient articles: need {needed}, have {available}")]
    InsufficientArticles { needed: usize, available: usize },

    #[error("cold user: CF inapplicable")]
    ColdUser,

    #[error("no eligible test users")]
    NoEligibleUsers,

    #[error("bad file format in {path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
