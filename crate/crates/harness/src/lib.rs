//! Training, evaluation, and study harness for the view-action-matching
//! agent: teacher-forcing training over oracle trajectories, closed-loop
//! rollout evaluation with task and goal-condition metrics, the cumulative
//! ablation table, and the validation/test seed-selection gap study.

pub mod ablation;
pub mod config;
pub mod dataset;
pub mod error;
pub mod gap;
pub mod metrics;
pub mod policy;
pub mod rollout;
pub mod train;

pub use ablation::{
    ablation_csv, run_ablation, AblationReport, AblationRow, REFERENCE_NOTE,
    REFERENCE_SUCCESS_RATES,
};
pub use config::RunConfig;
pub use dataset::Dataset;
pub use error::HarnessError;
pub use gap::{gap_csv, gap_study, GapStudyReport, SeedRow, GAP_SEED_SALT};
pub use metrics::{
    evaluate, evaluate_policy, sample_std, spearman, subgoal_report, EpisodeEval, EvalOutcome,
    SplitMetrics, SubgoalReport, SubgoalRow,
};
pub use policy::{front_objects, ModelPolicy, OraclePolicy, Policy, RandomPolicy, StopPolicy};
pub use rollout::{rollout, rollout_subgoal, subgoal_satisfied, RolloutLimits, RolloutOutcome};
pub use train::{train, train_episodes, TrainArtifacts, MODEL_SEED_SALT, SHUFFLE_SEED_SALT};

pub type Result<T> = std::result::Result<T, HarnessError>;
