use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vam_agent::{encode_language_context, prepare_tokens, select_action, LanguageContext, Model};
use vam_tensor::Tape;
use vam_world::{
    Action, ActionKind, ActionType, Category, Episode, TaskSpec, ViewObservation, Vocab, World,
    ACTION_KINDS,
};

use crate::Result;

/// Anything that can drive a rollout: given the current world and what the
/// agent is allowed to see, produce the next action. The world reference
/// carries ground-truth object identities for the visible-object list, just
/// as the simulator's interaction masks would.
pub trait Policy {
    fn decide(
        &mut self,
        world: &World,
        obs: &ViewObservation,
        task: &TaskSpec,
        subgoal_index: usize,
        history: &[usize],
    ) -> Result<Action>;
}

/// The object identities visible in the front view, in presentation order.
pub fn front_objects(world: &World, obs: &ViewObservation) -> Vec<(usize, Category)> {
    obs.front()
        .visible
        .iter()
        .map(|&id| (id, world.objects[id].category))
        .collect()
}

/// The trained agent. The instruction context is re-encoded only when the
/// subgoal (and with it the token sequence) changes.
pub struct ModelPolicy<'a> {
    model: &'a Model,
    vocab: &'a Vocab,
    cache: Option<(Vec<usize>, Tape, LanguageContext)>,
}

impl<'a> ModelPolicy<'a> {
    pub fn new(model: &'a Model, vocab: &'a Vocab) -> Self {
        Self {
            model,
            vocab,
            cache: None,
        }
    }
}

impl Policy for ModelPolicy<'_> {
    fn decide(
        &mut self,
        world: &World,
        obs: &ViewObservation,
        task: &TaskSpec,
        subgoal_index: usize,
        history: &[usize],
    ) -> Result<Action> {
        let tokens = prepare_tokens(task, subgoal_index, self.vocab)?;
        let stale = match &self.cache {
            Some((cached, _, _)) => cached != &tokens,
            None => true,
        };
        if stale {
            let mut tape = Tape::new();
            let ctx = encode_language_context(self.model, &mut tape, &tokens)?;
            self.cache = Some((tokens, tape, ctx));
        }
        let (_, tape, ctx) = self.cache.as_mut().expect("cache just filled");
        let features: Vec<Vec<f64>> = obs.views.iter().map(|v| v.features.clone()).collect();
        let visible = front_objects(world, obs);
        Ok(select_action(
            self.model, tape, ctx, history, &features, &visible,
        )?)
    }
}

/// Replays a recorded trajectory, emitting Stop once it runs out. Used to
/// pin the rollout/metric pipeline to the planner's upper bound.
pub struct OraclePolicy {
    actions: Vec<Action>,
    cursor: usize,
}

impl OraclePolicy {
    pub fn new(episode: &Episode) -> Self {
        Self {
            actions: episode.trajectory.steps.iter().map(|s| s.action).collect(),
            cursor: 0,
        }
    }
}

impl Policy for OraclePolicy {
    fn decide(
        &mut self,
        _world: &World,
        _obs: &ViewObservation,
        _task: &TaskSpec,
        _subgoal: usize,
        _history: &[usize],
    ) -> Result<Action> {
        let action = self
            .actions
            .get(self.cursor)
            .copied()
            .unwrap_or_else(Action::stop);
        self.cursor += 1;
        Ok(action)
    }
}

/// Uniform-random actions; manipulation kinds aim at a uniformly chosen
/// front-visible object (or none when nothing is visible).
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for RandomPolicy {
    fn decide(
        &mut self,
        world: &World,
        obs: &ViewObservation,
        _task: &TaskSpec,
        _subgoal: usize,
        _history: &[usize],
    ) -> Result<Action> {
        let kind = ACTION_KINDS[self.rng.gen_range(0..ACTION_KINDS.len())];
        if kind == ActionKind::Stop || kind.action_type() == ActionType::Navigation {
            return Ok(if kind == ActionKind::Stop {
                Action::stop()
            } else {
                Action::nav(kind)
            });
        }
        let visible = front_objects(world, obs);
        if visible.is_empty() {
            return Ok(Action {
                kind,
                object_arg: None,
            });
        }
        let (id, _) = visible[self.rng.gen_range(0..visible.len())];
        Ok(Action::manip(kind, id))
    }
}

/// Emits Stop immediately; the degenerate lower bound.
pub struct StopPolicy;

impl Policy for StopPolicy {
    fn decide(
        &mut self,
        _world: &World,
        _obs: &ViewObservation,
        _task: &TaskSpec,
        _subgoal: usize,
        _history: &[usize],
    ) -> Result<Action> {
        Ok(Action::stop())
    }
}
