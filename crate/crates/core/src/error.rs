use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("bit index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("cannot choose {k} positions out of {n}")]
    SubsetTooLarge { k: usize, n: usize },

    #[error("noise level must be at least 1")]
    ZeroNoiseLevel,

    #[error("key must contain at least one bit")]
    EmptyKey,

    #[error("{name} = {value} is outside {range}")]
    InvalidProbability {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("flip rate makes QBER unrecoverable (p_flip = {0})")]
    UnrecoverableFlipRate(f64),

    #[error("insecure parameters: p_flip = {p_flip} must exceed p_leaked = {p_leaked} (m = {m})")]
    SecurityViolation { p_flip: f64, p_leaked: f64, m: u32 },

    #[error("empty sample: fraction {fraction} of {n} bits selects nothing")]
    EmptySample { fraction: f64, n: usize },

    #[error("majority hit-rate formula requires an even noise level >= 2, got {0}")]
    OddNoiseLevel(u32),

    #[error("message carries no noise-BER proxy; use the half estimate instead")]
    MissingNoiseProxy,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),

    #[error("unsupported message version {0}")]
    UnsupportedVersion(u8),

    #[error("truncated message: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },

    #[error("inconsistent message lengths: {0}")]
    InconsistentLength(String),

    #[error("invalid key file: {0}")]
    KeyFormat(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    InCell {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user-supplied configuration or parameters
    /// rather than a failure while running.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Config(_)
            | Error::ZeroNoiseLevel
            | Error::InvalidProbability { .. }
            | Error::UnrecoverableFlipRate(_)
            | Error::SecurityViolation { .. }
            | Error::EmptySample { .. }
            | Error::Json { .. } => true,
            Error::InCell { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidProbability {
            name,
            value,
            range: "[0, 1]",
        })
    }
}
