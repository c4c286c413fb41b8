use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// A row of an input table does not follow its schema. Rows are 1-based,
    /// counting the header as row 1.
    #[error("schema violation at row {row}: {message}")]
    Schema { row: usize, message: String },

    #[error("duplicate full_name entries: {}", .0.join(", "))]
    DuplicateEntries(Vec<String>),

    /// Internal data that should be consistent is not (e.g. a rule references
    /// an itemset whose support is unknown).
    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("empty chain: script has no operators")]
    EmptyChain,

    #[error("chain syntax error at byte {offset}: {message}")]
    ChainSyntax { offset: usize, message: String },

    #[error("invalid stage transition {from} -> {to}")]
    StageTransition {
        from: &'static str,
        to: &'static str,
    },

    /// Failure talking to an external service; `retriable` tells the caller
    /// whether a later attempt may succeed.
    #[error("service error ({endpoint}): {message}")]
    Service {
        endpoint: String,
        message: String,
        retriable: bool,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }
}
