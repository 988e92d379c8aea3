//! Crate-wide error type.
//!
//! Every failure carries a stable name (see [`Error::name`]) that the CLI
//! prints as a prefix on the diagnostic stream, so scripts can match on it.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("not a RIFF/WAVE container: {0}")]
    MalformedWav(String),

    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("channel {index} out of range for a {channels}-channel clip")]
    ChannelOutOfRange { index: usize, channels: usize },

    #[error("sample rate {found} Hz does not match the configured {expected} Hz (resampling is not performed)")]
    SampleRateMismatch { expected: u32, found: u32 },

    #[error("no samples found: {0}")]
    EmptyDataset(String),

    #[error("unreadable path: {0}")]
    UnreadablePath(String),

    #[error("signal too short: {0}")]
    SignalTooShort(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("config mismatch: {0}")]
    ConfigMismatch(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("non-finite score: {0}")]
    NonFiniteScore(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("format error: {0}")]
    FormatError(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    IoError(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable name, used as the CLI's diagnostic prefix.
    pub fn name(&self) -> &'static str {
        match self {
            Error::MalformedWav(_) => "MalformedWav",
            Error::UnsupportedEncoding(_) => "UnsupportedEncoding",
            Error::ChannelOutOfRange { .. } => "ChannelOutOfRange",
            Error::SampleRateMismatch { .. } => "SampleRateMismatch",
            Error::EmptyDataset(_) => "EmptyDataset",
            Error::UnreadablePath(_) => "UnreadablePath",
            Error::SignalTooShort(_) => "SignalTooShort",
            Error::EmptyInput(_) => "EmptyInput",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::ConfigMismatch(_) => "ConfigMismatch",
            Error::DomainError(_) => "DomainError",
            Error::DegenerateLabels(_) => "DegenerateLabels",
            Error::NonFiniteScore(_) => "NonFiniteScore",
            Error::InsufficientSamples(_) => "InsufficientSamples",
            Error::FormatError(_) => "FormatError",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::IoError(_) => "IoError",
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::FormatError(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::FormatError(format!("json: {e}"))
    }
}
