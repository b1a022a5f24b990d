use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed wav file {path}: {reason}")]
    MalformedWav { path: PathBuf, reason: String },
    #[error("unsupported wav format in {path}: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },
    #[error("signal is empty")]
    EmptySignal,
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("window length {0} must be even and at least 2")]
    BadLength(usize),
    #[error("value {value} outside the valid range {lo}..={hi}")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("signal of {len} samples is shorter than the required {needed}")]
    SignalTooShort { len: usize, needed: usize },
    #[error("resample ratio {0} outside [0.25, 4]")]
    BadRatio(f64),
    #[error("edit spans overlap or are unsorted at span starting {0}")]
    OverlappingSpans(usize),
    #[error("edit span {start}..{end} outside signal of {len} samples")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },
    #[error("no voiced pitch found (peak correlation {0:.3})")]
    Unvoiced(f64),
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("backward requires a scalar loss, got shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("sequence of length {0} too long for exhaustive enumeration")]
    TooLong(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no salient segments found")]
    NoSegments,
    #[error("invalid model file: {0}")]
    ModelFormat(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
