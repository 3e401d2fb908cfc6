use serde::{Deserialize, Serialize};

use crate::action::{ActionKind, Pose};
use crate::object::CATEGORY_COUNT;
use crate::world::World;

/// Fixed view order, everywhere: front, left, right, up, down.
pub const VIEW_COUNT: usize = 5;
pub const VIEW_NAMES: [&str; VIEW_COUNT] = ["front", "left", "right", "up", "down"];

/// Synthetic view feature layout: a per-category visible-object histogram,
/// a nearest-object distance bucket one-hot (none / one cell / two cells),
/// and a blocked/free indicator for the cell ahead.
pub const FEATURE_WIDTH: usize = CATEGORY_COUNT + 3 + 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewData {
    pub features: Vec<f64>,
    /// Ids of visible objects, nearest cell first, ascending id within a cell.
    pub visible: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewObservation {
    /// Indexed by [`VIEW_NAMES`] order.
    pub views: Vec<ViewData>,
}

impl ViewObservation {
    pub fn front(&self) -> &ViewData {
        &self.views[0]
    }
}

/// Objects visible from a pose: everything in the facing cell and the cell
/// beyond it (when the facing cell is see-through), at matching camera
/// pitch, not held, and not shut inside a closed container.
fn visible_from(world: &World, pose: Pose) -> (Vec<usize>, Option<usize>) {
    let (dx, dy) = pose.heading.delta();
    let c1 = (pose.x as i32 + dx, pose.y as i32 + dy);
    let c2 = (c1.0 + dx, c1.1 + dy);
    let mut visible = Vec::new();
    let mut nearest = None;
    let mut cells = vec![(c1, 1usize)];
    // Furniture and walls block line of sight to the second cell.
    if world.traversable(c1.0, c1.1) {
        cells.push((c2, 2));
    }
    for ((cx, cy), dist) in cells {
        if !world.in_bounds(cx, cy) {
            continue;
        }
        let cell = (cx as usize, cy as usize);
        for obj in &world.objects {
            if obj.position != cell || obj.flags.held {
                continue;
            }
            if world.effective_height(obj).pitch() != pose.pitch {
                continue;
            }
            if let Some(cid) = obj.container {
                let container = &world.objects[cid];
                if container.category.openable() && !container.flags.open {
                    continue;
                }
            }
            visible.push(obj.id);
            nearest.get_or_insert(dist);
        }
    }
    (visible, nearest)
}

fn features_from(world: &World, pose: Pose) -> ViewData {
    let (visible, nearest) = visible_from(world, pose);
    let mut features = vec![0.0; FEATURE_WIDTH];
    for &id in &visible {
        features[world.objects[id].category.index()] += 1.0;
    }
    let bucket = match nearest {
        None => 0,
        Some(1) => 1,
        _ => 2,
    };
    features[CATEGORY_COUNT + bucket] = 1.0;
    let (ax, ay) = world.ahead(pose);
    let free = world.traversable(ax, ay);
    features[CATEGORY_COUNT + 3] = if free { 0.0 } else { 1.0 };
    features[CATEGORY_COUNT + 4] = if free { 1.0 } else { 0.0 };
    ViewData { features, visible }
}

/// Five egocentric views. Each non-front view equals the front view the
/// agent would have after the corresponding navigation action, computed
/// without mutating the world.
pub fn observe(world: &World) -> ViewObservation {
    let poses = [
        world.agent,
        world.peek_pose(ActionKind::TurnLeft),
        world.peek_pose(ActionKind::TurnRight),
        world.peek_pose(ActionKind::LookUp),
        world.peek_pose(ActionKind::LookDown),
    ];
    ViewObservation {
        views: poses.iter().map(|p| features_from(world, *p)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::{Action, Heading};
    use crate::object::{Category, Flags, ObjectState};
    use crate::world::{empty_room, SplitTag};

    #[test]
    fn feature_width_is_fixed_for_all_views() {
        let w = empty_room(3, 0, SplitTag::Train);
        let obs = observe(&w);
        assert_eq!(obs.views.len(), VIEW_COUNT);
        for v in &obs.views {
            assert_eq!(v.features.len(), FEATURE_WIDTH);
        }
    }

    #[test]
    fn boxed_in_agent_sees_the_same_wall_pattern_everywhere() {
        let mut w = empty_room(3, 0, SplitTag::Train);
        // Wall off everything except the agent's cell.
        let agent_cell = (w.agent.x, w.agent.y);
        for y in 0..w.height {
            for x in 0..w.width {
                let idx = w.cell_index(x, y);
                w.walls[idx] = (x, y) != agent_cell;
            }
        }
        let obs = observe(&w);
        for v in &obs.views[1..] {
            assert_eq!(v.features, obs.views[0].features);
            assert!(v.visible.is_empty());
        }
    }

    #[test]
    fn left_view_equals_front_after_turn_left() {
        let mut w = empty_room(9, 0, SplitTag::Train);
        w.objects.push(ObjectState {
            id: 0,
            category: Category::Table,
            position: (2, 4),
            flags: Flags::default(),
            container: None,
        });
        w.agent.heading = Heading::North;
        let obs = observe(&w);
        let (turned, ok) = w.step(&Action::nav(ActionKind::TurnLeft)).unwrap();
        assert!(ok);
        let obs_turned = observe(&turned);
        assert_eq!(obs.views[1], obs_turned.views[0]);
    }

    #[test]
    fn up_view_equals_front_at_max_pitch() {
        let mut w = empty_room(9, 0, SplitTag::Train);
        w.agent.pitch = 1;
        let obs = observe(&w);
        assert_eq!(obs.views[3], obs.views[0]);
    }

    #[test]
    fn furniture_blocks_sight_to_second_cell() {
        let mut w = empty_room(9, 0, SplitTag::Train);
        for (i, (cat, pos)) in [
            (Category::Table, (4, 3)),
            (Category::Desk, (4, 2)),
        ]
        .into_iter()
        .enumerate()
        {
            w.objects.push(ObjectState {
                id: i,
                category: cat,
                position: pos,
                flags: Flags::default(),
                container: None,
            });
        }
        w.agent.heading = Heading::North;
        let obs = observe(&w);
        assert_eq!(obs.front().visible, vec![0], "desk behind table is hidden");
    }

    #[test]
    fn second_cell_visible_over_open_floor() {
        let mut w = empty_room(9, 0, SplitTag::Train);
        w.objects.push(ObjectState {
            id: 0,
            category: Category::Table,
            position: (4, 2),
            flags: Flags::default(),
            container: None,
        });
        w.agent.heading = Heading::North;
        let obs = observe(&w);
        assert_eq!(obs.front().visible, vec![0]);
        let bucket = &obs.front().features[CATEGORY_COUNT..CATEGORY_COUNT + 3];
        assert_eq!(bucket, &[0.0, 0.0, 1.0], "nearest object two cells out");
    }
}
