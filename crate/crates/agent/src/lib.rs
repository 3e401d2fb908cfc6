//! A miniature cross-modal instruction-following agent.
//!
//! The model encodes the goal and current step instruction with a small
//! transformer, encodes the recent action history linearly, fuses each
//! egocentric view with both through cross-modal attention layers, and
//! scores every action by matching its learned embedding against the view
//! it corresponds to. A learned positive gate then separates navigation
//! from manipulation scores before the argmax. Three cumulative ablation
//! flags (wide view, view-action matching, action-type gate) recover the
//! simpler baseline variants.

mod config;
mod data;
mod error;
mod forward;
mod gradcheck;
mod loss;
mod model;
mod policy;

pub use config::{AblationFlags, ModelConfig};
pub use data::{examples_from_episode, prepare_tokens, StepExample};
pub use error::AgentError;
pub use forward::{
    encode_history, encode_language, encode_language_context, forward_step, fuse_view,
    match_score, type_index, view_for_action, LanguageContext, StepScores,
};
pub use gradcheck::{
    loss_grad_max_rel_err, run_loss_gradcheck, tiny_config, LossCheckReport, DEFAULT_STEP,
};
pub use loss::{batch_action_accuracy, compute_loss};
pub use model::{expected_params, Model};
pub use policy::{apply_gate, argmax_lowest, select_action};

pub type Result<T> = std::result::Result<T, AgentError>;
