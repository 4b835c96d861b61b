use thiserror::Error;

/// Errors reported by the model, the solvers and the learner.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("channel count must be between 1 and {max}, got {got}")]
    InvalidChannelCount { got: usize, max: usize },

    #[error("move encoding {code} out of range for {channels} channel(s)")]
    MoveOutOfRange { code: u32, channels: usize },

    #[error("invalid active set: {0}")]
    InvalidActiveSet(String),

    #[error("invalid activation pmf: {0}")]
    InvalidPmf(String),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("no move for active sensor {0}")]
    MissingMove(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported scenario: {0}")]
    UnsupportedScenario(String),

    #[error("instance too large: {strategies} strategies exceed the limit of {limit}")]
    InstanceTooLarge { strategies: f64, limit: u64 },

    #[error("reduction defined for A=2 only: support set {0} has {1} member(s)")]
    NotPairwise(String, usize),

    #[error("arm {arm} out of range for a table with {arms} arm(s)")]
    ArmOutOfRange { arm: usize, arms: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("pmf parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
