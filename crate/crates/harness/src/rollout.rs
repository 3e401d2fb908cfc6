use vam_world::{
    goal_conditions_met, observe, ActionKind, Episode, Subgoal, SubgoalType, TaskSpec, TrajStep,
    Trajectory, World,
};

use crate::config::RunConfig;
use crate::policy::Policy;
use crate::Result;

/// Closed-loop rollout limits.
#[derive(Debug, Clone, Copy)]
pub struct RolloutLimits {
    /// In-world action failures tolerated before the rollout aborts.
    pub failure_budget: usize,
    /// Step limit = ceil(multiplier × oracle length) + slack.
    pub multiplier: f64,
    pub slack: usize,
}

impl RolloutLimits {
    pub fn from_config(config: &RunConfig) -> Self {
        Self {
            failure_budget: config.failure_budget,
            multiplier: config.step_limit_multiplier,
            slack: config.step_limit_slack,
        }
    }

    pub fn step_limit(&self, oracle_len: usize) -> usize {
        (self.multiplier * oracle_len as f64).ceil() as usize + self.slack
    }
}

/// What a closed-loop episode produced.
#[derive(Debug, Clone)]
pub struct RolloutOutcome {
    pub trajectory: Trajectory,
    pub success: bool,
    pub met_conditions: usize,
    pub total_conditions: usize,
    pub failures: usize,
    pub final_world: World,
}

/// Has this subgoal's effect been achieved in `world`?  Mirrors the
/// conventional per-subgoal success conditions: navigation counts once its
/// target is interactable, manipulation once the intended state holds.
pub fn subgoal_satisfied(world: &World, subgoal: &Subgoal) -> bool {
    let Ok(obj) = world.object(subgoal.arg) else {
        return false;
    };
    match subgoal.kind {
        SubgoalType::GotoLocation => world.interactable(subgoal.arg).unwrap_or(false),
        SubgoalType::PickupObject => obj.flags.held,
        SubgoalType::PutObject => !obj.flags.held && obj.container == subgoal.aux,
        SubgoalType::CleanObject => obj.flags.clean,
        SubgoalType::HeatObject => obj.flags.heated,
        SubgoalType::CoolObject => obj.flags.cooled,
        SubgoalType::SliceObject => obj.flags.sliced,
        SubgoalType::ToggleObject => obj.flags.toggled_on,
    }
}

/// Advance the subgoal pointer past every already-satisfied subgoal, never
/// regressing and never moving past the last one. The agent is always
/// conditioned on the first instruction whose effect is still missing.
fn advance_pointer(world: &World, task: &TaskSpec, pointer: usize) -> usize {
    let mut p = pointer;
    while p + 1 < task.subgoals.len() && subgoal_satisfied(world, &task.subgoals[p]) {
        p += 1;
    }
    p
}

/// Run one closed-loop episode: the policy's own actions feed its history;
/// termination on Stop, the step limit, or the failure budget. Success and
/// goal-condition counts come from the final world.
pub fn rollout<P: Policy>(
    policy: &mut P,
    episode: &Episode,
    limits: &RolloutLimits,
) -> Result<RolloutOutcome> {
    let task = &episode.task;
    let step_limit = limits.step_limit(episode.trajectory.len());
    let mut world = episode.world.clone();
    let mut pointer = advance_pointer(&world, task, 0);
    let mut history: Vec<usize> = Vec::new();
    let mut steps: Vec<TrajStep> = Vec::new();
    let mut failures = 0usize;
    while steps.len() < step_limit && failures <= limits.failure_budget {
        let obs = observe(&world);
        let action = policy.decide(&world, &obs, task, pointer, &history)?;
        let pre_hash = world.hash();
        let (next, ok) = world.step(&action)?;
        steps.push(TrajStep {
            pre_hash,
            action,
            subgoal: pointer,
        });
        if !ok {
            failures += 1;
        }
        history.push(action.kind.index());
        world = next;
        if action.kind == ActionKind::Stop {
            break;
        }
        pointer = advance_pointer(&world, task, pointer);
    }
    let (met_conditions, total_conditions) = goal_conditions_met(&world, task);
    Ok(RolloutOutcome {
        trajectory: Trajectory { steps },
        success: met_conditions == total_conditions,
        met_conditions,
        total_conditions,
        failures,
        final_world: world,
    })
}

/// Roll out a single subgoal from its oracle start state: the policy sees
/// only that subgoal's instruction, primed with the ground-truth history
/// prefix, and succeeds as soon as the subgoal's effect holds.
pub fn rollout_subgoal<P: Policy>(
    policy: &mut P,
    start: &World,
    task: &TaskSpec,
    subgoal_index: usize,
    history_prefix: &[usize],
    leg_len: usize,
    limits: &RolloutLimits,
) -> Result<bool> {
    let subgoal = &task.subgoals[subgoal_index];
    if subgoal_satisfied(start, subgoal) {
        return Ok(true);
    }
    let step_limit = limits.step_limit(leg_len);
    let mut world = start.clone();
    let mut history: Vec<usize> = history_prefix.to_vec();
    let mut failures = 0usize;
    for _ in 0..step_limit {
        if failures > limits.failure_budget {
            break;
        }
        let obs = observe(&world);
        let action = policy.decide(&world, &obs, task, subgoal_index, &history)?;
        let (next, ok) = world.step(&action)?;
        if !ok {
            failures += 1;
        }
        history.push(action.kind.index());
        world = next;
        if subgoal_satisfied(&world, subgoal) {
            return Ok(true);
        }
        if action.kind == ActionKind::Stop {
            break;
        }
    }
    Ok(false)
}
