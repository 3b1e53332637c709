use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("input too short: need at least {needed} samples, got {got}")]
    InputTooShort { needed: usize, got: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("value outside domain: {0}")]
    Domain(String),
    #[error("index {index} out of range 0..{len}")]
    Index { index: usize, len: usize },
    #[error("invalid state: {0}")]
    State(String),
    #[error("batch contains no voiced frames")]
    EmptyBatch,
    #[error("example skipped: {0}")]
    SkipExample(String),
    #[error("contours cannot be aligned: {0}")]
    Alignment(String),
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
    #[error("training diverged at epoch {epoch}, step {step}: loss = {loss}")]
    Divergence {
        epoch: usize,
        step: usize,
        loss: f64,
    },
}
