use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode {path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("sample rate ≠ 2000 Hz (found {found} Hz)")]
    SampleRate { found: u32 },

    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },

    #[error("clip of {len} samples is shorter than one {window}-sample window")]
    ClipTooShort { len: usize, window: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("frequency band {lo_hz}..{hi_hz} Hz contains no spectrogram rows")]
    EmptyBand { lo_hz: f64, hi_hz: f64 },

    #[error("empty region pixel set")]
    EmptyRegion,

    #[error("feature length mismatch: model expects {expected}, got {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("training data must contain both classes")]
    SingleClass,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("model format: {0}")]
    ModelFormat(String),

    #[error("unsupported model format version {found} (expected {expected})")]
    ModelVersion { found: u32, expected: u32 },

    #[error("empty input: {0}")]
    Empty(&'static str),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad arguments or configuration rather than bad data.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
