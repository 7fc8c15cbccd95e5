use num_bigint::BigUint;
use thiserror::Error;

/// Errors raised by evaluation, search and exact-search entry points.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("policy has {policy} observations but the POMDP has {pomdp}")]
    ObservationMismatch { policy: usize, pomdp: usize },

    #[error("policy cell ({observation}, {memory}) uses action {action} but the POMDP has {actions} actions")]
    ActionOutOfRange {
        observation: usize,
        memory: usize,
        action: usize,
        actions: usize,
    },

    #[error("policies have different shapes ({left_obs}x{left_mem} vs {right_obs}x{right_mem})")]
    ShapeMismatch {
        left_obs: usize,
        left_mem: usize,
        right_obs: usize,
        right_mem: usize,
    },

    #[error("memory count must be at least 1")]
    ZeroMemory,

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },

    #[error("episode count must be at least 1")]
    NoEpisodes,

    #[error("policy space has {size} policies, above the enumeration limit of {limit}")]
    SpaceTooLarge { size: BigUint, limit: u64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
