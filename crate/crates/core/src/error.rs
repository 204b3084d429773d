use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid embedding set: {0}")]
    Validation(String),

    #[error("format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("alignment failed: {shared} shared ids (left has {left}, right has {right}); need at least 2")]
    Alignment {
        left: usize,
        right: usize,
        shared: usize,
    },

    #[error("condition ids differ between geometries: {0}")]
    ConditionMismatch(String),

    #[error("too few conditions: {found} (need at least {needed})")]
    TooFewConditions { found: usize, needed: usize },

    #[error("{count} of {total} pairs hit a constant vector (limit {limit_percent}%); offending ids: {ids:?}")]
    Degenerate {
        count: u64,
        total: u64,
        limit_percent: f64,
        ids: Vec<String>,
    },

    #[error("degenerate geometry: {0}")]
    ConstantCells(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(offset: u64, reason: impl Into<String>) -> Self {
        Error::Format {
            offset,
            reason: reason.into(),
        }
    }

    /// Process exit code used by the CLI: 1 usage, 2 data/format, 3 degenerate data.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 1,
            Error::Degenerate { .. } | Error::ConstantCells(_) | Error::TooFewConditions { .. } => 3,
            _ => 2,
        }
    }
}
