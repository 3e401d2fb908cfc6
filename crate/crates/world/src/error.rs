use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorldError {
    /// Malformed object argument: the id names nothing in this world.
    /// Distinct from in-world action failure, which is success=false.
    #[error("unknown object id {id}")]
    UnknownObject { id: usize },

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("planning failed: {0}")]
    Planning(String),

    #[error("trajectory replay diverged: {0}")]
    Replay(String),

    #[error("dataset io: {0}")]
    Io(#[from] std::io::Error),

    #[error("dataset encoding: {0}")]
    Json(#[from] serde_json::Error),
}
