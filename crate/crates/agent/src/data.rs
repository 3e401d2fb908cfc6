use serde::{Deserialize, Serialize};
use vam_world::{observe, replay_worlds, Episode, TaskSpec, Vocab, SEP_TOKEN};

use crate::error::AgentError;
use crate::forward::type_index;
use crate::Result;

/// One teacher-forced decision point: everything the model sees plus the
/// ground-truth action it must imitate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepExample {
    /// Token ids: goal statement, separator, current subgoal instruction.
    pub tokens: Vec<usize>,
    /// Ground-truth previous action kinds, oldest first (untrimmed).
    pub history: Vec<usize>,
    /// Raw feature vectors of the five views in `VIEW_NAMES` order.
    pub features: Vec<Vec<f64>>,
    /// Index of the ground-truth action kind.
    pub target_kind: usize,
    /// 0 navigation, 1 manipulation.
    pub target_type: usize,
    /// Category index of the ground-truth object argument, if any.
    pub target_category: Option<usize>,
    /// Which subgoal this step belongs to.
    pub subgoal_index: usize,
}

/// Token ids for "goal [SEP] current step instruction".
pub fn prepare_tokens(task: &TaskSpec, subgoal_index: usize, vocab: &Vocab) -> Result<Vec<usize>> {
    let steps = &task.step_instructions;
    if subgoal_index >= steps.len() {
        return Err(AgentError::Label(format!(
            "subgoal index {subgoal_index} out of range ({} subgoals)",
            steps.len()
        )));
    }
    let words = task
        .goal_statement
        .iter()
        .chain(std::iter::once(&SEP_TOKEN.to_string()))
        .chain(steps[subgoal_index].iter())
        .cloned()
        .collect::<Vec<String>>();
    words
        .iter()
        .map(|w| {
            vocab
                .token_id(w)
                .ok_or_else(|| AgentError::Vocabulary(format!("token {w:?} not in vocabulary")))
        })
        .collect()
}

/// Expand an episode's oracle trajectory into teacher-forcing examples, one
/// per recorded action. Histories are the ground-truth prefixes.
pub fn examples_from_episode(ep: &Episode, vocab: &Vocab) -> Result<Vec<StepExample>> {
    let worlds = replay_worlds(&ep.world, &ep.trajectory)?;
    let mut history: Vec<usize> = Vec::new();
    let mut out = Vec::with_capacity(worlds.len());
    for (world, step) in worlds.iter().zip(&ep.trajectory.steps) {
        let obs = observe(world);
        let features: Vec<Vec<f64>> = obs.views.iter().map(|v| v.features.clone()).collect();
        let tokens = prepare_tokens(&ep.task, step.subgoal, vocab)?;
        let target_category = match step.action.object_arg {
            Some(id) => Some(world.object(id)?.category.index()),
            None => None,
        };
        out.push(StepExample {
            tokens,
            history: history.clone(),
            features,
            target_kind: step.action.kind.index(),
            target_type: type_index(step.action.kind),
            target_category,
            subgoal_index: step.subgoal,
        });
        history.push(step.action.kind.index());
    }
    Ok(out)
}
