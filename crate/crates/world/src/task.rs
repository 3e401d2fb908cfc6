use serde::{Deserialize, Serialize};

use crate::world::World;

/// The eight-way subgoal taxonomy tasks decompose into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SubgoalType {
    GotoLocation,
    PickupObject,
    PutObject,
    CleanObject,
    HeatObject,
    CoolObject,
    SliceObject,
    ToggleObject,
}

pub const SUBGOAL_TYPES: [SubgoalType; 8] = [
    SubgoalType::GotoLocation,
    SubgoalType::PickupObject,
    SubgoalType::PutObject,
    SubgoalType::CleanObject,
    SubgoalType::HeatObject,
    SubgoalType::CoolObject,
    SubgoalType::SliceObject,
    SubgoalType::ToggleObject,
];

impl SubgoalType {
    pub fn name(self) -> &'static str {
        match self {
            SubgoalType::GotoLocation => "GotoLocation",
            SubgoalType::PickupObject => "PickupObject",
            SubgoalType::PutObject => "PutObject",
            SubgoalType::CleanObject => "CleanObject",
            SubgoalType::HeatObject => "HeatObject",
            SubgoalType::CoolObject => "CoolObject",
            SubgoalType::SliceObject => "SliceObject",
            SubgoalType::ToggleObject => "ToggleObject",
        }
    }
}

/// One typed task segment. `arg` is the primary object; `aux` names the
/// receptacle or station when the type needs one (Put destination, Clean
/// sink, Heat station, Cool fridge, Slice knife).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subgoal {
    pub kind: SubgoalType,
    pub arg: usize,
    pub aux: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagKind {
    Clean,
    Heated,
    Cooled,
    Sliced,
    ToggledOn,
}

/// Predicate over final object states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalCondition {
    /// Object rests in/on the receptacle (and is not in hand).
    In { obj: usize, recep: usize },
    /// A state flag is set.
    Flag { obj: usize, flag: FlagKind },
    /// Object is in the agent's hand.
    Held { obj: usize },
}

impl GoalCondition {
    pub fn met(&self, world: &World) -> bool {
        match *self {
            GoalCondition::In { obj, recep } => {
                let o = &world.objects[obj];
                o.container == Some(recep) && !o.flags.held
            }
            GoalCondition::Flag { obj, flag } => {
                let f = &world.objects[obj].flags;
                match flag {
                    FlagKind::Clean => f.clean,
                    FlagKind::Heated => f.heated,
                    FlagKind::Cooled => f.cooled,
                    FlagKind::Sliced => f.sliced,
                    FlagKind::ToggledOn => f.toggled_on,
                }
            }
            GoalCondition::Held { obj } => world.objects[obj].flags.held,
        }
    }
}

/// Task archetypes, each expanding to a fixed subgoal schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskTemplate {
    PickAndPlace,
    CleanAndPlace,
    HeatAndPlace,
    CoolAndPlace,
    SliceAndPlace,
    Examine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub template: TaskTemplate,
    pub goal_statement: Vec<String>,
    /// One instruction per subgoal, aligned by index.
    pub step_instructions: Vec<Vec<String>>,
    pub subgoals: Vec<Subgoal>,
    pub goal_conditions: Vec<GoalCondition>,
}

/// Count satisfied goal predicates: (met, total). Pure.
pub fn goal_conditions_met(world: &World, task: &TaskSpec) -> (usize, usize) {
    let met = task
        .goal_conditions
        .iter()
        .filter(|c| c.met(world))
        .count();
    (met, task.goal_conditions.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::object::{Category, Flags, ObjectState};
    use crate::world::{empty_room, SplitTag};

    #[test]
    fn single_heated_predicate_counts_one_of_one() {
        let mut w = empty_room(1, 0, SplitTag::Train);
        w.objects.push(ObjectState {
            id: 0,
            category: Category::Pan,
            position: (4, 3),
            flags: Flags::default(),
            container: None,
        });
        let task = TaskSpec {
            template: TaskTemplate::HeatAndPlace,
            goal_statement: vec![],
            step_instructions: vec![],
            subgoals: vec![],
            goal_conditions: vec![GoalCondition::Flag {
                obj: 0,
                flag: FlagKind::Heated,
            }],
        };
        assert_eq!(goal_conditions_met(&w, &task), (0, 1));
        w.objects[0].flags.heated = true;
        assert_eq!(goal_conditions_met(&w, &task), (1, 1));
    }

    #[test]
    fn in_condition_requires_release() {
        let mut w = empty_room(1, 0, SplitTag::Train);
        for (i, cat) in [Category::Table, Category::Mug].into_iter().enumerate() {
            w.objects.push(ObjectState {
                id: i,
                category: cat,
                position: (4, 3),
                flags: Flags::default(),
                container: None,
            });
        }
        w.objects[1].container = Some(0);
        w.objects[1].flags.held = true;
        let cond = GoalCondition::In { obj: 1, recep: 0 };
        assert!(!cond.met(&w), "a held object is not placed");
        w.objects[1].flags.held = false;
        assert!(cond.met(&w));
    }
}
