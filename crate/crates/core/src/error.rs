//! Crate-wide error type.

use crate::optimizer::ExperimentResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: parameter `{param}`: {reason}")]
    InvalidConfiguration { param: String, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("need at least {need} observations, got {got}")]
    TooFewObservations { need: usize, got: usize },

    #[error("classification requires both classes, got a single class")]
    SingleClass,

    #[error("model fit failed: {0}")]
    FitFailure(String),

    #[error("source task `{source_id}`: {source}")]
    SourceTask {
        source_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("task `{task_id}`: configuration is not a row of the task table")]
    ConfigNotInTable { task_id: String },

    #[error("unknown task id `{0}`")]
    UnknownTask(String),

    #[error("task `{task_id}`: {reason}")]
    InvalidTask { task_id: String, reason: String },

    #[error("benchmark file: {0}")]
    BenchmarkFormat(String),

    #[error("evaluation budget exceeds pool: every configuration visited")]
    BudgetExceedsPool,

    #[error("evaluation failed after {completed} trials: {reason}")]
    EvaluationAborted {
        reason: String,
        completed: usize,
        partial: Box<ExperimentResult>,
    },

    #[error("result set incomplete, missing cells: {}", .0.join(", "))]
    MissingCells(Vec<String>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
