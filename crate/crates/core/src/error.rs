//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by dataset handling, training, quantization, defenses,
/// and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invariant violation in field `{field}`: {message}")]
    Invariant { field: String, message: String },

    #[error("schema version mismatch: expected {expected}, found {found}")]
    SchemaVersion { expected: u32, found: u32 },

    #[error("deserialization failed: {0}")]
    Deserialize(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("download failed (retryable): {0}")]
    Download(String),

    #[error("checksum mismatch for {path}: expected {expected}, found {found}")]
    Checksum {
        path: String,
        expected: String,
        found: String,
    },

    #[error("unsupported architecture `{0}`")]
    UnsupportedArchitecture(String),

    #[error("unsupported parameter tensors for quantization: {0:?}")]
    UnsupportedLayers(Vec<String>),

    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("non-finite loss in trigger optimization for class {class} at step {step}")]
    NonFiniteLoss { class: usize, step: usize },

    #[error("no eligible samples: {0}")]
    NoEligibleSamples(String),

    #[error("class count mismatch: model has {model}, data has {data}")]
    ClassCountMismatch { model: usize, data: usize },

    #[error("attack validity gate failed: ASR {asr:.4} (min {min_asr}), CA {ca:.4} (min {min_ca})")]
    GateFailed {
        asr: f64,
        ca: f64,
        min_asr: f64,
        min_ca: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand used by validation code throughout the datamodel.
    pub fn invariant(field: &str, message: impl Into<String>) -> Self {
        Error::Invariant {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
