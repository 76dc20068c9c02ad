//! Error types shared across the crate.

use thiserror::Error;

/// Errors surfaced by tensor, tape and model operations.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Quaternion norm below the normalization threshold.
    #[error("degenerate quaternion: norm {norm} <= 1e-12")]
    DegenerateQuaternion { norm: f64 },

    /// Feature axis not divisible by four, so it cannot hold packed quaternions.
    #[error("bad feature axis: length {len} is not divisible by 4")]
    BadFeatureAxis { len: usize },

    /// Activation name not in the supported set.
    #[error("unknown activation `{0}` (expected sigmoid, tanh or relu)")]
    UnknownActivation(String),

    /// A recorded node referenced a parent id not yet on the tape.
    #[error("dangling parent: node id {id} out of range (tape has {len} nodes)")]
    DanglingParent { id: usize, len: usize },

    /// backward() called on a non-scalar node.
    #[error("backward root must be scalar, got shape {shape:?}")]
    NonScalarRoot { shape: Vec<usize> },

    /// Operand shapes do not conform.
    #[error("shape mismatch in {op}: {details}")]
    ShapeMismatch { op: &'static str, details: String },

    /// Token id at or beyond the vocabulary size.
    #[error("token id {id} out of range for vocab of size {vocab}")]
    IdOutOfRange { id: usize, vocab: usize },

    /// Pooling over a fully masked sequence.
    #[error("empty sequence: no unmasked positions")]
    EmptySequence,

    /// Probability outside [0, 1] beyond tolerated slack.
    #[error("bad probability {0}: outside [0, 1]")]
    BadProbability(f64),

    /// Invalid hyperparameter or config value.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A lexicon required by the operation was not loaded.
    #[error("missing lexicon: {0}")]
    MissingLexicon(&'static str),

    /// Text too short for the requested augmentation.
    #[error("text too short: {len} tokens, need at least {min}")]
    TooShort { len: usize, min: usize },

    /// Empty input text where words are required.
    #[error("empty text")]
    EmptyText,

    /// Source corpus for attack generation has no usable examples.
    #[error("empty source: {0}")]
    EmptySource(String),

    /// Corpus has no examples.
    #[error("empty corpus")]
    EmptyCorpus,

    /// Malformed data file.
    #[error("parse error in {path}: {details}")]
    Parse { path: String, details: String },

    /// Underlying I/O failure.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Checkpoint file is malformed or truncated.
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
}

impl CoreError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CoreError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
