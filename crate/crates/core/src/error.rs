//! Error type shared by all pipeline stages.

use std::path::PathBuf;

/// Errors produced anywhere in the metric pipeline, tagged with the stage
/// that raised them so CLI callers can attribute failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("OBJ parse error at line {line}: {msg}")]
    ObjParse { line: usize, msg: String },

    #[error("texture decode error: {0}")]
    TextureDecode(String),

    #[error("manifest error at row {row}: {msg}")]
    ManifestRow { row: usize, msg: String },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("mesh is empty after cleaning (metric undefined)")]
    EmptyAfterClean,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("patch construction failed: {0}")]
    Patch(String),

    #[error("degenerate feature: {0}")]
    DegenerateFeature(String),

    #[error("scoring failed: no usable keypoints (all {0} skipped)")]
    NoUsableKeypoints(usize),

    #[error("correlation undefined: {0}")]
    CorrelationUndefined(String),

    #[error("logistic fit failed: {0}")]
    FitFailed(String),

    #[error("evaluation failed: {0}")]
    Eval(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by unreadable or malformed inputs, as opposed
    /// to failures of the metric itself on valid inputs.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::ObjParse { .. }
                | Error::TextureDecode(_)
                | Error::ManifestRow { .. }
                | Error::Manifest(_)
                | Error::InvalidParameter(_)
                | Error::Io { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
