use thiserror::Error;

use crate::efg::InfoSetId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("profile has no action for information set {info_set:#x} of player {player}")]
    MissingAction { player: usize, info_set: InfoSetId },

    #[error("malformed game: {0}")]
    MalformedGame(String),

    #[error("invalid game specification: {0}")]
    InvalidSpec(String),

    #[error("tree exceeds the node budget of {budget}")]
    SizeExceeded { budget: usize },

    #[error("{what} exceeds the enumeration cap of {cap}")]
    TooLarge { what: String, cap: u64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("stored sample cannot evaluate regrets: {0}")]
    SkeletonInsufficient(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
