use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vam_agent::ModelConfig;
use vam_tensor::AdamWConfig;

use crate::error::HarnessError;
use crate::Result;

/// Everything a run needs: dataset sizes, training schedule, optimizer,
/// rollout limits, and the model. One config file fully determines every
/// artifact a command produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed: episode generation, parameter init, and shuffling all
    /// derive from it. Recorded in every report.
    pub seed: u64,
    /// Training episodes generated for the train split.
    pub train_episodes: usize,
    /// Episodes generated for each evaluation split.
    pub eval_episodes: usize,
    /// Teacher-forcing passes over the training set.
    pub epochs: usize,
    /// Episodes whose steps form one optimizer batch.
    pub batch_episodes: usize,
    /// AdamW settings. The desk-scale default learning rate is 1e-3; the
    /// full-scale experiment's 1e-5 remains selectable.
    pub optimizer: AdamWConfig,
    /// Cosine learning-rate decay floor as a fraction of `optimizer.lr`:
    /// the rate anneals from `lr` down to `lr * lr_min_fraction` over the
    /// run. `1.0` keeps the rate constant.
    pub lr_min_fraction: f64,
    /// Consecutive-failure allowance per rollout before aborting it.
    pub failure_budget: usize,
    /// Rollout step limit = ceil(multiplier × oracle length) + slack.
    pub step_limit_multiplier: f64,
    pub step_limit_slack: usize,
    /// Seeds trained by the gap study.
    pub gap_seeds: usize,
    pub model: ModelConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            train_episodes: 200,
            eval_episodes: 50,
            epochs: 20,
            batch_episodes: 4,
            optimizer: AdamWConfig {
                lr: 1e-3,
                ..AdamWConfig::default()
            },
            lr_min_fraction: 1.0,
            failure_budget: 10,
            step_limit_multiplier: 2.0,
            step_limit_slack: 20,
            gap_seeds: 5,
            model: ModelConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.model
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let counts = [
            ("train_episodes", self.train_episodes),
            ("eval_episodes", self.eval_episodes),
            ("epochs", self.epochs),
            ("batch_episodes", self.batch_episodes),
            ("gap_seeds", self.gap_seeds),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(HarnessError::Config(format!("{name} must be positive")));
            }
        }
        if !(self.optimizer.lr.is_finite() && self.optimizer.lr > 0.0) {
            return Err(HarnessError::Config("optimizer.lr must be positive".into()));
        }
        if !(self.lr_min_fraction.is_finite() && (0.0..=1.0).contains(&self.lr_min_fraction)) {
            return Err(HarnessError::Config(
                "lr_min_fraction must lie in [0, 1]".into(),
            ));
        }
        if !(self.step_limit_multiplier.is_finite() && self.step_limit_multiplier >= 1.0) {
            return Err(HarnessError::Config(
                "step_limit_multiplier must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Hex digest of the canonical JSON form, recorded in reports so any
    /// row can be traced back to the exact configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
