use thiserror::Error;

/// Errors surfaced by model configuration, encoding, and training paths.
#[derive(Debug, Error)]
pub enum AgentError {
    /// Invalid model configuration (non-monotone ablation flags, zero sizes).
    #[error("config error: {0}")]
    Config(String),

    /// A token id outside the closed vocabulary.
    #[error("vocabulary error: {0}")]
    Vocabulary(String),

    /// Mismatched widths between components.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A ground-truth label outside its domain.
    #[error("label error: {0}")]
    Label(String),

    /// Checkpoint whose parameters do not match the configuration.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Tensor(#[from] vam_tensor::TensorError),

    #[error(transparent)]
    World(#[from] vam_world::WorldError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
