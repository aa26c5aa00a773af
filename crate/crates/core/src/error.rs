use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid counts: {0}")]
    InvalidCounts(String),

    #[error("empty input")]
    EmptyInput,

    #[error("all weights are zero")]
    DegenerateWeights,

    #[error("prior bank fingerprint mismatch: bank has {bank}, configuration requires {config}")]
    FingerprintMismatch { bank: String, config: String },

    #[error("dimension mismatch: expected {expected} doses, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("trial is not active")]
    TrialNotActive,

    #[error("trial has not finished")]
    TrialNotFinished,

    #[error("corrupt bank file: {0}")]
    CorruptBank(String),

    #[error("unsupported bank file version {0}")]
    UnsupportedVersion(u16),

    #[error("target {target} is unreachable: {reason}")]
    UnreachableTarget { target: f64, reason: String },

    #[error("scenario parse error on line {line}: {message}")]
    ScenarioParse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
