use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{source_name}:{line}: {message}")]
    Parse { source_name: String, line: usize, message: String },

    #[error("relations without a dimension mapping: {}", .0.join(", "))]
    UnmappedRelations(Vec<String>),

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("unknown dimension `{0}`")]
    UnknownDimension(String),

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("no question template for relation `{0}`")]
    MissingTemplate(String),

    #[error("invalid template for `{relation}`: {message}")]
    InvalidTemplate { relation: String, message: String },

    #[error("cannot synthesize a question for statement `{statement}`: {cause}")]
    Synthesis { statement: String, cause: SkipCause },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss is {loss}")]
    Divergence { epoch: usize, batch: usize, loss: f64 },

    #[error("invalid dynamics log: {0}")]
    Validation(String),

    #[error("dynamics log has gaps: {}", .0.join(", "))]
    Gaps(Vec<String>),

    #[error("invalid sample spec: {0}")]
    Spec(String),

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("cannot partition: {0}")]
    Partition(String),

    #[error("missing predictions for: {}", .0.join(", "))]
    MissingPredictions(Vec<String>),

    #[error("adapter `{adapter}` rejected record {record}: {message}")]
    Adapter { adapter: String, record: usize, message: String },

    #[error("scorer failed on question `{question}`: {message}")]
    Evaluation { question: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }
}

/// Why a statement produced no question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipCause {
    MissingTemplate,
    EmptyAnswer,
    InsufficientDistractors,
}

impl std::fmt::Display for SkipCause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SkipCause::MissingTemplate => "no template for relation",
            SkipCause::EmptyAnswer => "answer has no content tokens",
            SkipCause::InsufficientDistractors => "not enough non-overlapping distractors",
        })
    }
}
