use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::action::{Action, ActionKind, Heading, Pose};
use crate::object::{Category, ObjHeight, ObjectState};
use crate::{Result, WorldError};

pub const GRID_SIDE: usize = 9;
pub const MIN_PITCH: i8 = -1;
pub const MAX_PITCH: i8 = 1;

/// Dataset split. Seen evaluation splits reuse the train layout pool with
/// fresh object placements; unseen splits draw from their own disjoint pools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTag {
    Train,
    ValidSeen,
    ValidUnseen,
    TestSeen,
    TestUnseen,
}

impl SplitTag {
    pub const ALL: [SplitTag; 5] = [
        SplitTag::Train,
        SplitTag::ValidSeen,
        SplitTag::ValidUnseen,
        SplitTag::TestSeen,
        SplitTag::TestUnseen,
    ];

    pub fn dir_name(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::ValidSeen => "valid_seen",
            SplitTag::ValidUnseen => "valid_unseen",
            SplitTag::TestSeen => "test_seen",
            SplitTag::TestUnseen => "test_unseen",
        }
    }

    /// Disjoint layout-pool id ranges: train and both seen splits share
    /// 0..32, valid_unseen owns 32..48, test_unseen owns 48..64.
    pub fn layout_pool(self) -> std::ops::Range<u32> {
        match self {
            SplitTag::Train | SplitTag::ValidSeen | SplitTag::TestSeen => 0..32,
            SplitTag::ValidUnseen => 32..48,
            SplitTag::TestUnseen => 48..64,
        }
    }

    /// Seed salt so the same index draws different episodes per split.
    pub fn salt(self) -> u64 {
        match self {
            SplitTag::Train => 0x7261_696e,
            SplitTag::ValidSeen => 0x7653_6565,
            SplitTag::ValidUnseen => 0x7655_6e73,
            SplitTag::TestSeen => 0x7453_6565,
            SplitTag::TestUnseen => 0x7455_6e73,
        }
    }

    pub fn is_test(self) -> bool {
        matches!(self, SplitTag::TestSeen | SplitTag::TestUnseen)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoomKind {
    Kitchen,
    Bathroom,
    Bedroom,
    LivingRoom,
}

impl RoomKind {
    pub fn of_layout(layout_id: u32) -> Self {
        match layout_id % 4 {
            0 => RoomKind::Kitchen,
            1 => RoomKind::Bathroom,
            2 => RoomKind::Bedroom,
            _ => RoomKind::LivingRoom,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub seed: u64,
    pub layout_id: u32,
    pub split: SplitTag,
    pub room: RoomKind,
    pub width: usize,
    pub height: usize,
    /// Row-major wall mask; the border is all wall.
    pub walls: Vec<bool>,
    pub objects: Vec<ObjectState>,
    pub agent: Pose,
}

impl World {
    pub fn cell_index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn in_bounds(&self, x: i32, y: i32) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn is_wall(&self, x: usize, y: usize) -> bool {
        self.walls[self.cell_index(x, y)]
    }

    /// Static (non-pickupable) object occupying a cell, if any.
    pub fn static_at(&self, x: usize, y: usize) -> Option<&ObjectState> {
        self.objects
            .iter()
            .find(|o| !o.category.pickupable() && o.position == (x, y))
    }

    pub fn traversable(&self, x: i32, y: i32) -> bool {
        self.in_bounds(x, y)
            && !self.is_wall(x as usize, y as usize)
            && self.static_at(x as usize, y as usize).is_none()
    }

    pub fn object(&self, id: usize) -> Result<&ObjectState> {
        self.objects.get(id).ok_or(WorldError::UnknownObject { id })
    }

    /// Cell directly ahead of the agent.
    pub fn ahead(&self, pose: Pose) -> (i32, i32) {
        let (dx, dy) = pose.heading.delta();
        (pose.x as i32 + dx, pose.y as i32 + dy)
    }

    pub fn held_object(&self) -> Option<&ObjectState> {
        self.objects.iter().find(|o| o.flags.held)
    }

    /// Effective viewing height of an object: statics report their own
    /// height; portables inherit the height of the surface they occupy.
    pub fn effective_height(&self, obj: &ObjectState) -> ObjHeight {
        if obj.category.pickupable() {
            if let Some(surface) = self.static_at(obj.position.0, obj.position.1) {
                return surface.category.height();
            }
        }
        obj.category.height()
    }

    /// An object is interactable when it sits in the facing cell, is visible
    /// at the current pitch, is not shut inside a closed container, and is
    /// not in hand.
    pub fn interactable(&self, id: usize) -> Result<bool> {
        let obj = self.object(id)?;
        if obj.flags.held {
            return Ok(false);
        }
        let (ax, ay) = self.ahead(self.agent);
        if !self.in_bounds(ax, ay) || obj.position != (ax as usize, ay as usize) {
            return Ok(false);
        }
        if self.effective_height(obj).pitch() != self.agent.pitch {
            return Ok(false);
        }
        if let Some(cid) = obj.container {
            let container = self.object(cid)?;
            if container.category.openable() && !container.flags.open {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Canonical content hash; any state change shows up here.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("world serializes");
        let digest = Sha256::digest(&bytes);
        let mut out = String::with_capacity(64);
        for b in digest {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }

    /// Apply an action, returning the next world and whether it succeeded.
    /// Failed actions return the input world unchanged (total no-op). An
    /// unknown object id is a contract error, not an in-world failure.
    pub fn step(&self, action: &Action) -> Result<(World, bool)> {
        if let Some(id) = action.object_arg {
            // Validate identity up front so contract errors are distinct
            // from in-world failures.
            self.object(id)?;
        }
        let mut next = self.clone();
        let ok = next.apply(action)?;
        if ok {
            Ok((next, true))
        } else {
            Ok((self.clone(), false))
        }
    }

    fn apply(&mut self, action: &Action) -> Result<bool> {
        match action.kind {
            ActionKind::MoveForward => {
                let (nx, ny) = self.ahead(self.agent);
                if !self.traversable(nx, ny) {
                    return Ok(false);
                }
                self.agent.x = nx as usize;
                self.agent.y = ny as usize;
                let cell = (self.agent.x, self.agent.y);
                if let Some(held) = self.objects.iter_mut().find(|o| o.flags.held) {
                    held.position = cell;
                }
                Ok(true)
            }
            ActionKind::TurnLeft => {
                self.agent.heading = self.agent.heading.left();
                Ok(true)
            }
            ActionKind::TurnRight => {
                self.agent.heading = self.agent.heading.right();
                Ok(true)
            }
            ActionKind::LookUp => {
                if self.agent.pitch >= MAX_PITCH {
                    return Ok(false);
                }
                self.agent.pitch += 1;
                Ok(true)
            }
            ActionKind::LookDown => {
                if self.agent.pitch <= MIN_PITCH {
                    return Ok(false);
                }
                self.agent.pitch -= 1;
                Ok(true)
            }
            ActionKind::Pickup => self.apply_pickup(action.object_arg),
            ActionKind::Put => self.apply_put(action.object_arg),
            ActionKind::Open => self.apply_open(action.object_arg, true),
            ActionKind::Close => self.apply_open(action.object_arg, false),
            ActionKind::ToggleOn => self.apply_toggle(action.object_arg, true),
            ActionKind::ToggleOff => self.apply_toggle(action.object_arg, false),
            ActionKind::Slice => self.apply_slice(action.object_arg),
            ActionKind::Stop => Ok(true),
        }
    }

    fn apply_pickup(&mut self, arg: Option<usize>) -> Result<bool> {
        let Some(id) = arg else { return Ok(false) };
        if self.held_object().is_some()
            || !self.object(id)?.category.pickupable()
            || !self.interactable(id)?
        {
            return Ok(false);
        }
        let cell = (self.agent.x, self.agent.y);
        let obj = &mut self.objects[id];
        obj.flags.held = true;
        obj.container = None;
        obj.position = cell;
        Ok(true)
    }

    fn apply_put(&mut self, arg: Option<usize>) -> Result<bool> {
        let Some(recep_id) = arg else {
            return Ok(false);
        };
        let Some(held_id) = self.held_object().map(|o| o.id) else {
            return Ok(false);
        };
        let recep = self.object(recep_id)?;
        if !recep.category.receptacle() || !self.interactable(recep_id)? {
            return Ok(false);
        }
        if recep.category.openable() && !recep.flags.open {
            return Ok(false);
        }
        let cell = recep.position;
        let obj = &mut self.objects[held_id];
        obj.flags.held = false;
        obj.container = Some(recep_id);
        obj.position = cell;
        Ok(true)
    }

    fn apply_open(&mut self, arg: Option<usize>, open: bool) -> Result<bool> {
        let Some(id) = arg else { return Ok(false) };
        let obj = self.object(id)?;
        if !obj.category.openable() || obj.flags.open == open || !self.interactable(id)? {
            return Ok(false);
        }
        self.objects[id].flags.open = open;
        // Shutting the fridge chills everything inside.
        if !open && self.objects[id].category.cools() {
            let ids: Vec<usize> = self.contents_of(id);
            for cid in ids {
                self.objects[cid].flags.cooled = true;
                self.objects[cid].flags.heated = false;
            }
        }
        Ok(true)
    }

    fn apply_toggle(&mut self, arg: Option<usize>, on: bool) -> Result<bool> {
        let Some(id) = arg else { return Ok(false) };
        let obj = self.object(id)?;
        if !obj.category.toggleable() || obj.flags.toggled_on == on || !self.interactable(id)? {
            return Ok(false);
        }
        self.objects[id].flags.toggled_on = on;
        if on {
            let station = self.objects[id].category;
            // Station effects reach the contents and whatever the agent is
            // holding up to the station.
            let mut touched: Vec<usize> = self.contents_of(id);
            if let Some(held) = self.held_object() {
                touched.push(held.id);
            }
            for tid in touched {
                if station.cleans() {
                    self.objects[tid].flags.clean = true;
                }
                if station.heats() {
                    self.objects[tid].flags.heated = true;
                    self.objects[tid].flags.cooled = false;
                }
            }
        }
        Ok(true)
    }

    fn apply_slice(&mut self, arg: Option<usize>) -> Result<bool> {
        let Some(id) = arg else { return Ok(false) };
        let holding_knife = self
            .held_object()
            .map(|o| o.category == Category::Knife)
            .unwrap_or(false);
        let obj = self.object(id)?;
        if !holding_knife || !obj.category.sliceable() || obj.flags.sliced {
            return Ok(false);
        }
        if !self.interactable(id)? {
            return Ok(false);
        }
        self.objects[id].flags.sliced = true;
        Ok(true)
    }

    fn contents_of(&self, recep_id: usize) -> Vec<usize> {
        self.objects
            .iter()
            .filter(|o| o.container == Some(recep_id))
            .map(|o| o.id)
            .collect()
    }

    /// Hypothetical pose after a navigation action, without mutating the
    /// world; failed moves leave the pose unchanged, matching step().
    pub fn peek_pose(&self, kind: ActionKind) -> Pose {
        let mut pose = self.agent;
        match kind {
            ActionKind::TurnLeft => pose.heading = pose.heading.left(),
            ActionKind::TurnRight => pose.heading = pose.heading.right(),
            ActionKind::LookUp => pose.pitch = (pose.pitch + 1).min(MAX_PITCH),
            ActionKind::LookDown => pose.pitch = (pose.pitch - 1).max(MIN_PITCH),
            ActionKind::MoveForward => {
                let (nx, ny) = self.ahead(pose);
                if self.traversable(nx, ny) {
                    pose.x = nx as usize;
                    pose.y = ny as usize;
                }
            }
            _ => {}
        }
        pose
    }
}

/// Empty-room scaffold used by generation and tests: border walls only.
pub fn empty_room(seed: u64, layout_id: u32, split: SplitTag) -> World {
    let (width, height) = (GRID_SIDE, GRID_SIDE);
    let mut walls = vec![false; width * height];
    for x in 0..width {
        walls[x] = true;
        walls[(height - 1) * width + x] = true;
    }
    for y in 0..height {
        walls[y * width] = true;
        walls[y * width + width - 1] = true;
    }
    World {
        seed,
        layout_id,
        split,
        room: RoomKind::of_layout(layout_id),
        width,
        height,
        walls,
        objects: Vec::new(),
        agent: Pose {
            x: width / 2,
            y: height / 2,
            heading: Heading::North,
            pitch: 0,
        },
    }
}
