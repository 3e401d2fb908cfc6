use serde::{Deserialize, Serialize};

/// The thirteen action kinds, in canonical order. The first five are
/// navigation; everything from Pickup on (Stop included) is manipulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionKind {
    MoveForward,
    TurnLeft,
    TurnRight,
    LookUp,
    LookDown,
    Pickup,
    Put,
    Open,
    Close,
    ToggleOn,
    ToggleOff,
    Slice,
    Stop,
}

pub const ACTION_KINDS: [ActionKind; 13] = [
    ActionKind::MoveForward,
    ActionKind::TurnLeft,
    ActionKind::TurnRight,
    ActionKind::LookUp,
    ActionKind::LookDown,
    ActionKind::Pickup,
    ActionKind::Put,
    ActionKind::Open,
    ActionKind::Close,
    ActionKind::ToggleOn,
    ActionKind::ToggleOff,
    ActionKind::Slice,
    ActionKind::Stop,
];

pub const ACTION_COUNT: usize = ACTION_KINDS.len();

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionType {
    Navigation,
    Manipulation,
}

impl ActionKind {
    pub fn index(self) -> usize {
        ACTION_KINDS.iter().position(|k| *k == self).expect("listed")
    }

    pub fn action_type(self) -> ActionType {
        match self {
            ActionKind::MoveForward
            | ActionKind::TurnLeft
            | ActionKind::TurnRight
            | ActionKind::LookUp
            | ActionKind::LookDown => ActionType::Navigation,
            _ => ActionType::Manipulation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub kind: ActionKind,
    /// Object identity for manipulation actions; navigation never carries one.
    pub object_arg: Option<usize>,
}

impl Action {
    pub fn nav(kind: ActionKind) -> Self {
        assert_eq!(
            kind.action_type(),
            ActionType::Navigation,
            "{kind:?} is not a navigation action"
        );
        Self {
            kind,
            object_arg: None,
        }
    }

    pub fn manip(kind: ActionKind, object: usize) -> Self {
        assert_eq!(
            kind.action_type(),
            ActionType::Manipulation,
            "{kind:?} is not a manipulation action"
        );
        Self {
            kind,
            object_arg: Some(object),
        }
    }

    pub fn stop() -> Self {
        Self {
            kind: ActionKind::Stop,
            object_arg: None,
        }
    }
}

/// Compass heading; turning left cycles N→W→S→E.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heading {
    North,
    East,
    South,
    West,
}

impl Heading {
    pub fn left(self) -> Self {
        match self {
            Heading::North => Heading::West,
            Heading::West => Heading::South,
            Heading::South => Heading::East,
            Heading::East => Heading::North,
        }
    }

    pub fn right(self) -> Self {
        match self {
            Heading::North => Heading::East,
            Heading::East => Heading::South,
            Heading::South => Heading::West,
            Heading::West => Heading::North,
        }
    }

    /// (dx, dy) of one step forward; y grows southward.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Heading::North => (0, -1),
            Heading::East => (1, 0),
            Heading::South => (0, 1),
            Heading::West => (-1, 0),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Heading::North => 0,
            Heading::East => 1,
            Heading::South => 2,
            Heading::West => 3,
        }
    }

    pub const ALL: [Heading; 4] = [Heading::North, Heading::East, Heading::South, Heading::West];
}

/// Agent pose: cell, heading, and camera pitch ∈ {-1 (down), 0, +1 (up)}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pose {
    pub x: usize,
    pub y: usize,
    pub heading: Heading,
    pub pitch: i8,
}
