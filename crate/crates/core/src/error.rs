use std::io;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("test current is zero, impedance is undefined")]
    ZeroCurrent,
    #[error("the null class has no gesture template")]
    NullGesture,
    #[error("magnitude must be positive, found {0}")]
    NonPositiveMagnitude(f64),
    #[error("series of length {len} is shorter than the window size {size}")]
    SeriesTooShort { len: usize, size: usize },
    #[error("no labels to weight")]
    EmptyLabels,
    #[error("hold-out key {0:?} not present in the data")]
    UnknownKey(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("model configuration mismatch: {0}")]
    ConfigMismatch(String),
    #[error("unsupported format version: expected {expected}, found {found}")]
    FormatVersionMismatch { expected: String, found: String },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("cross-validation needs at least 2 folds, found {0}")]
    InsufficientFolds(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed record: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
