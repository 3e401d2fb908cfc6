use thiserror::Error;

/// Harness failures, grouped by the lifecycle stage that raised them so the
/// command-line tool can map them to distinct exit codes.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error(transparent)]
    Agent(#[from] vam_agent::AgentError),

    #[error(transparent)]
    World(#[from] vam_world::WorldError),

    #[error(transparent)]
    Tensor(#[from] vam_tensor::TensorError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
