use serde::{Deserialize, Serialize};
use vam_world::{Vocab, ACTION_COUNT, FEATURE_WIDTH, VIEW_COUNT};

use crate::error::AgentError;
use crate::Result;

/// The three cumulative architecture switches. Rows of the ablation are
/// nested: matching needs the wide view, the gate needs matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationFlags {
    /// Acquire all five egocentric views per step (off: front view only).
    #[serde(default)]
    pub wide_view: bool,
    /// Score actions by matching action embeddings against their views
    /// (off: a single linear classifier over concatenated features).
    #[serde(default)]
    pub view_act_matching: bool,
    /// Multiply match scores by learned positive per-action-type weights.
    #[serde(default)]
    pub act_type_gate: bool,
}

impl AblationFlags {
    /// Ablation row 1..=4 with cumulatively enabled components.
    pub fn row(row: usize) -> Self {
        assert!((1..=4).contains(&row), "ablation rows are 1..=4");
        Self {
            wide_view: row >= 2,
            view_act_matching: row >= 3,
            act_type_gate: row >= 4,
        }
    }

    /// 1-based row number in the ablation table.
    pub fn row_number(&self) -> usize {
        1 + self.wide_view as usize + self.view_act_matching as usize + self.act_type_gate as usize
    }

    /// Check/cross marks in table order (wide view, matching, gate).
    pub fn label(&self) -> String {
        let mark = |b: bool| if b { '\u{2713}' } else { '\u{2717}' };
        format!(
            "{}{}{}",
            mark(self.wide_view),
            mark(self.view_act_matching),
            mark(self.act_type_gate)
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.view_act_matching && !self.wide_view {
            return Err(AgentError::Config(
                "view_act_matching requires wide_view (rows are cumulative)".into(),
            ));
        }
        if self.act_type_gate && !self.view_act_matching {
            return Err(AgentError::Config(
                "act_type_gate requires view_act_matching (rows are cumulative)".into(),
            ));
        }
        Ok(())
    }
}

impl Default for AblationFlags {
    /// The full model (ablation row 4).
    fn default() -> Self {
        Self::row(4)
    }
}

/// Hyperparameters of the agent. Defaults are desk scale; `hidden` may be
/// raised to the full-scale 768.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Shared hidden width d.
    pub hidden: usize,
    /// Self-attention layers in the language encoder.
    pub language_layers: usize,
    /// Cross-modal layers fusing each view with the language features.
    pub cross_layers: usize,
    /// Closed instruction vocabulary size.
    pub vocab_size: usize,
    /// Width of one raw view feature vector.
    pub feature_width: usize,
    /// Number of discrete action kinds.
    pub action_count: usize,
    /// Egocentric views per time step.
    pub view_count: usize,
    /// Action-history window fed to the history encoder.
    pub history_window: usize,
    /// Maximum token positions with learned position embeddings.
    pub max_tokens: usize,
    /// Weight of the auxiliary gate-supervision cross-entropy.
    pub gate_loss_weight: f64,
    pub flags: AblationFlags,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            language_layers: 2,
            cross_layers: 2,
            vocab_size: Vocab::builtin().len(),
            feature_width: FEATURE_WIDTH,
            action_count: ACTION_COUNT,
            view_count: VIEW_COUNT,
            history_window: 6,
            max_tokens: 48,
            gate_loss_weight: 0.5,
            flags: AblationFlags::default(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        self.flags.validate()?;
        let positive = [
            ("hidden", self.hidden),
            ("language_layers", self.language_layers),
            ("cross_layers", self.cross_layers),
            ("vocab_size", self.vocab_size),
            ("history_window", self.history_window),
            ("max_tokens", self.max_tokens),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(AgentError::Config(format!("{name} must be positive")));
            }
        }
        if self.action_count != ACTION_COUNT {
            return Err(AgentError::Config(format!(
                "action_count must be {ACTION_COUNT} (the action set is closed)"
            )));
        }
        if self.view_count != VIEW_COUNT {
            return Err(AgentError::Config(format!(
                "view_count must be {VIEW_COUNT} (front/left/right/up/down)"
            )));
        }
        if self.feature_width != FEATURE_WIDTH {
            return Err(AgentError::Config(format!(
                "feature_width must be {FEATURE_WIDTH} to match the simulator"
            )));
        }
        if !(self.gate_loss_weight.is_finite() && self.gate_loss_weight >= 0.0) {
            return Err(AgentError::Config(
                "gate_loss_weight must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Config with the given ablation row, other fields unchanged.
    pub fn with_row(mut self, row: usize) -> Self {
        self.flags = AblationFlags::row(row);
        self
    }
}
