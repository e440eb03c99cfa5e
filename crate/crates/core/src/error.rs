use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid map parameters: {0}")]
    InvalidMapParams(String),
    #[error("network validation failed: {0}")]
    InvalidNetwork(String),
    #[error("cannot place {requested} vehicles without overlap ({available} free spawn points)")]
    SpawnOverflow { requested: usize, available: usize },
    #[error("invalid range [{0}, {1}]")]
    InvalidRange(u32, u32),
    #[error("non-positive gap {0} m passed to the car-following model")]
    NonPositiveGap(f64),
    #[error("negative argument: {0}")]
    NegativeArgument(&'static str),
    #[error("approaches belong to different intersections")]
    MismatchedIntersections,
    #[error("no active episode")]
    NoEpisode,
    #[error("episode already finished at frame {0}")]
    EpisodeDone(u64),
    #[error("action index {0} out of range 0..6")]
    InvalidAction(i64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown policy '{0}'")]
    UnknownPolicy(String),
    #[error("log error: {0}")]
    Log(String),
    #[error("cannot bind {addr}")]
    Bind { addr: String, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
