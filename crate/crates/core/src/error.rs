use std::path::PathBuf;

/// Errors produced by the selection library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("size error: expected {expected} bytes, found {found}")]
    Size { expected: u64, found: u64 },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("empty result: {0}")]
    EmptyResult(String),

    #[error("design matrix is rank deficient at column `{column}`")]
    RankDeficient { column: String },

    #[error("degenerate response: {0}")]
    DegenerateResponse(String),

    #[error("statistic undefined for SNP {snp}: {reason}")]
    UndefinedStatistic { snp: usize, reason: &'static str },

    #[error("infeasible simulation constraints: {0}")]
    Infeasible(String),
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Format(_) => "format",
            Error::Size { .. } => "size",
            Error::Validation(_) => "validation",
            Error::Argument(_) => "argument",
            Error::EmptyResult(_) => "empty_result",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::DegenerateResponse(_) => "degenerate_response",
            Error::UndefinedStatistic { .. } => "undefined_statistic",
            Error::Infeasible(_) => "infeasible",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
