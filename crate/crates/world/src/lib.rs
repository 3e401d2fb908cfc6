//! Deterministic procedural indoor gridworld mirroring ALFRED's structure:
//! stateful objects, navigation + manipulation actions, five egocentric
//! views, templated hierarchical instructions, subgoal decomposition,
//! disjoint seen/unseen layout pools, and an oracle planner that produces
//! the expert demonstrations.
//!
//! Everything is a pure function of (seed, config): worlds step
//! immutable-in/new-value-out, and regeneration is bit-identical.

mod action;
mod episode;
mod error;
mod instruct;
mod object;
mod observe;
mod planner;
mod task;
mod world;

pub use action::{Action, ActionKind, ActionType, Heading, Pose, ACTION_COUNT, ACTION_KINDS};
pub use episode::{
    export_split, generate_episode, generate_split, load_split, mix_seed, Episode,
};
pub use error::WorldError;
pub use instruct::{compute_vocabulary, render_instructions, Vocab, SEP_TOKEN};
pub use object::{Category, Flags, ObjHeight, ObjectState, CATEGORIES, CATEGORY_COUNT};
pub use observe::{observe, ViewData, ViewObservation, FEATURE_WIDTH, VIEW_COUNT, VIEW_NAMES};
pub use planner::{plan_oracle, replay, replay_worlds, TrajStep, Trajectory};
pub use task::{
    goal_conditions_met, FlagKind, GoalCondition, Subgoal, SubgoalType, TaskSpec, TaskTemplate,
    SUBGOAL_TYPES,
};
pub use world::{empty_room, RoomKind, SplitTag, World, GRID_SIDE};

pub type Result<T> = std::result::Result<T, WorldError>;
