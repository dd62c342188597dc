use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("unknown traffic label {0:?}")]
    UnknownLabel(String),

    #[error("training split is empty: no normal records in the training file")]
    EmptyTrain,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite gradient in parameter block `{0}`")]
    NonFiniteGradient(String),

    #[error("non-finite loss at epoch {epoch}, step {step}: {loss}")]
    NonFiniteLoss {
        epoch: usize,
        step: usize,
        loss: f64,
    },

    #[error("k = {k} out of range for an index of {rows} rows")]
    KOutOfRange { k: usize, rows: usize },

    #[error("ROC evaluation needs both classes (positives: {positives}, negatives: {negatives})")]
    SingleClass { positives: usize, negatives: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure class, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Malformed or unusable input data.
    Data,
    Config,
    Training,
    Evaluation,
    Io,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Parse { .. }
            | Error::UnknownLabel(_)
            | Error::EmptyTrain
            | Error::Format(_)
            | Error::Csv(_) => ErrorCategory::Data,
            Error::Config(_) | Error::Json(_) => ErrorCategory::Config,
            Error::NonFiniteGradient(_) | Error::NonFiniteLoss { .. } => ErrorCategory::Training,
            Error::KOutOfRange { .. } | Error::SingleClass { .. } | Error::Shape(_) => {
                ErrorCategory::Evaluation
            }
            Error::Io(_) => ErrorCategory::Io,
        }
    }
}
