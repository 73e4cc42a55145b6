use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error("unknown workload `{0}`")]
    UnknownWorkload(String),

    #[error("workload `{workload}` does not support {knob}")]
    UnsupportedKnob { workload: String, knob: &'static str },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed time table at line {line}: {msg}")]
    MalformedTable { line: usize, msg: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
