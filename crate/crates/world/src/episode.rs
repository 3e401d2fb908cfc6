use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::{Heading, Pose};
use crate::instruct::render_instructions;
use crate::object::{Category, Flags, ObjectState};
use crate::planner::{plan_oracle, Trajectory};
use crate::task::{
    goal_conditions_met, FlagKind, GoalCondition, Subgoal, SubgoalType, TaskSpec, TaskTemplate,
};
use crate::world::{empty_room, RoomKind, SplitTag, World, GRID_SIDE};
use crate::{Result, WorldError};

const GENERATION_ATTEMPTS: usize = 40;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic seed mixing for derived RNG streams.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    splitmix64(a ^ b.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// One generated benchmark episode: initial world, task, and expert plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub seed: u64,
    pub split: SplitTag,
    pub layout_id: u32,
    pub world: World,
    pub task: TaskSpec,
    pub trajectory: Trajectory,
}

fn required_furniture(room: RoomKind) -> &'static [Category] {
    match room {
        RoomKind::Kitchen => &[
            Category::CounterTop,
            Category::Sink,
            Category::Fridge,
            Category::Microwave,
            Category::Stove,
        ],
        RoomKind::Bathroom => &[
            Category::Sink,
            Category::CounterTop,
            Category::Toilet,
            Category::Bathtub,
        ],
        RoomKind::Bedroom => &[
            Category::Bed,
            Category::Desk,
            Category::Lamp,
            Category::Shelf,
        ],
        RoomKind::LivingRoom => &[
            Category::Sofa,
            Category::Table,
            Category::Lamp,
            Category::Shelf,
        ],
    }
}

fn optional_furniture(room: RoomKind) -> &'static [Category] {
    match room {
        RoomKind::Kitchen => &[
            Category::Table,
            Category::Cabinet,
            Category::Drawer,
            Category::GarbageCan,
            Category::Shelf,
        ],
        RoomKind::Bathroom => &[
            Category::Cabinet,
            Category::Drawer,
            Category::GarbageCan,
            Category::Shelf,
        ],
        RoomKind::Bedroom => &[
            Category::Drawer,
            Category::Table,
            Category::Cabinet,
            Category::GarbageCan,
        ],
        RoomKind::LivingRoom => &[
            Category::Desk,
            Category::Cabinet,
            Category::Drawer,
            Category::GarbageCan,
        ],
    }
}

fn portable_pool(room: RoomKind) -> &'static [Category] {
    match room {
        RoomKind::Kitchen => &[
            Category::Apple,
            Category::Bread,
            Category::Tomato,
            Category::Potato,
            Category::Mug,
            Category::Cup,
            Category::Plate,
            Category::Pan,
            Category::Pot,
            Category::Knife,
        ],
        RoomKind::Bathroom => &[Category::SoapBar, Category::Towel, Category::Cup],
        RoomKind::Bedroom => &[Category::Book, Category::Mug, Category::Towel, Category::Cup],
        RoomKind::LivingRoom => &[Category::Book, Category::Mug, Category::Cup, Category::Plate],
    }
}

/// Perimeter cells of the 7×7 interior, corners excluded so every furniture
/// piece keeps a traversable, reachable standing cell.
fn ring_cells() -> Vec<(usize, usize)> {
    let (lo, hi) = (1, GRID_SIDE - 2);
    let mut cells = Vec::new();
    for y in lo..=hi {
        for x in lo..=hi {
            let edge = x == lo || x == hi || y == lo || y == hi;
            let corner = (x == lo || x == hi) && (y == lo || y == hi);
            if edge && !corner {
                cells.push((x, y));
            }
        }
    }
    cells
}

/// Furniture arrangement as a pure function of the layout id: the same
/// layout reappears identically in every split that references it.
fn layout_furniture(layout_id: u32) -> Vec<(Category, (usize, usize))> {
    let room = RoomKind::of_layout(layout_id);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(0x4c41_594f_5554, layout_id as u64));
    let mut picks: Vec<Category> = required_furniture(room).to_vec();
    let mut optional = optional_furniture(room).to_vec();
    optional.shuffle(&mut rng);
    let extra = rng.gen_range(2..=3.min(optional.len()));
    picks.extend(optional.into_iter().take(extra));

    let mut cells = ring_cells();
    cells.shuffle(&mut rng);
    picks.into_iter().zip(cells).collect()
}

fn build_world(seed: u64, layout_id: u32, split: SplitTag, rng: &mut ChaCha8Rng) -> World {
    let mut world = empty_room(seed, layout_id, split);
    for (category, position) in layout_furniture(layout_id) {
        let id = world.objects.len();
        world.objects.push(ObjectState {
            id,
            category,
            position,
            flags: Flags::default(),
            container: None,
        });
    }

    // Portable objects: distinct categories, each resting on an open-top
    // receptacle, placed per episode rather than per layout.
    let open_receps: Vec<usize> = world
        .objects
        .iter()
        .filter(|o| o.category.receptacle() && !o.category.openable())
        .map(|o| o.id)
        .collect();
    let mut pool = portable_pool(world.room).to_vec();
    pool.shuffle(rng);
    let count = rng.gen_range(3..=4.min(pool.len()));
    for category in pool.into_iter().take(count) {
        let recep = open_receps[rng.gen_range(0..open_receps.len())];
        let position = world.objects[recep].position;
        let id = world.objects.len();
        world.objects.push(ObjectState {
            id,
            category,
            position,
            flags: Flags::default(),
            container: Some(recep),
        });
    }

    // Agent somewhere in the always-free inner box, level camera.
    let inner: Vec<(usize, usize)> = (2..GRID_SIDE - 2)
        .flat_map(|y| (2..GRID_SIDE - 2).map(move |x| (x, y)))
        .collect();
    let (x, y) = inner[rng.gen_range(0..inner.len())];
    world.agent = Pose {
        x,
        y,
        heading: Heading::ALL[rng.gen_range(0..4)],
        pitch: 0,
    };
    world
}

fn find_cat(world: &World, category: Category) -> Option<usize> {
    world
        .objects
        .iter()
        .find(|o| o.category == category)
        .map(|o| o.id)
    }

fn portables(world: &World) -> Vec<usize> {
    world
        .objects
        .iter()
        .filter(|o| o.category.pickupable())
        .map(|o| o.id)
        .collect()
}

/// Task templates this world can host.
fn viable_templates(world: &World) -> Vec<TaskTemplate> {
    let mut out = vec![TaskTemplate::PickAndPlace];
    let items = portables(world);
    if find_cat(world, Category::Sink).is_some() {
        out.push(TaskTemplate::CleanAndPlace);
    }
    if find_cat(world, Category::Stove).is_some() || find_cat(world, Category::Microwave).is_some()
    {
        out.push(TaskTemplate::HeatAndPlace);
    }
    if find_cat(world, Category::Fridge).is_some() {
        out.push(TaskTemplate::CoolAndPlace);
    }
    let has_knife = items
        .iter()
        .any(|&id| world.objects[id].category == Category::Knife);
    let has_sliceable = items
        .iter()
        .any(|&id| world.objects[id].category.sliceable());
    if has_knife && has_sliceable {
        out.push(TaskTemplate::SliceAndPlace);
    }
    if find_cat(world, Category::Lamp).is_some() {
        out.push(TaskTemplate::Examine);
    }
    out
}

fn goto(arg: usize) -> Subgoal {
    Subgoal {
        kind: SubgoalType::GotoLocation,
        arg,
        aux: None,
    }
}

fn sg(kind: SubgoalType, arg: usize, aux: Option<usize>) -> Subgoal {
    Subgoal { kind, arg, aux }
}

/// Sample a concrete task for the world; None when the draw is unusable
/// (e.g., no destination distinct from the object's start).
fn sample_task(world: &World, rng: &mut ChaCha8Rng) -> Option<(TaskTemplate, Vec<Subgoal>, Vec<GoalCondition>)> {
    let templates = viable_templates(world);
    let template = templates[rng.gen_range(0..templates.len())];
    let items = portables(world);

    // Destination receptacles exclude the object's current surface and any
    // station the template routes through.
    let dest_for = |obj: usize, banned: &[usize], rng: &mut ChaCha8Rng| -> Option<usize> {
        let start = world.objects[obj].container;
        let options: Vec<usize> = world
            .objects
            .iter()
            .filter(|o| o.category.receptacle())
            .map(|o| o.id)
            .filter(|id| Some(*id) != start && !banned.contains(id))
            .collect();
        if options.is_empty() {
            None
        } else {
            Some(options[rng.gen_range(0..options.len())])
        }
    };

    match template {
        TaskTemplate::PickAndPlace => {
            let obj = items[rng.gen_range(0..items.len())];
            let dest = dest_for(obj, &[], rng)?;
            Some((
                template,
                vec![
                    goto(obj),
                    sg(SubgoalType::PickupObject, obj, None),
                    goto(dest),
                    sg(SubgoalType::PutObject, obj, Some(dest)),
                ],
                vec![GoalCondition::In { obj, recep: dest }],
            ))
        }
        TaskTemplate::CleanAndPlace => {
            let sink = find_cat(world, Category::Sink)?;
            let obj = items[rng.gen_range(0..items.len())];
            let dest = dest_for(obj, &[sink], rng)?;
            Some((
                template,
                vec![
                    goto(obj),
                    sg(SubgoalType::PickupObject, obj, None),
                    goto(sink),
                    sg(SubgoalType::CleanObject, obj, Some(sink)),
                    goto(dest),
                    sg(SubgoalType::PutObject, obj, Some(dest)),
                ],
                vec![
                    GoalCondition::Flag {
                        obj,
                        flag: FlagKind::Clean,
                    },
                    GoalCondition::In { obj, recep: dest },
                ],
            ))
        }
        TaskTemplate::HeatAndPlace => {
            let stations: Vec<usize> = [Category::Stove, Category::Microwave]
                .into_iter()
                .filter_map(|c| find_cat(world, c))
                .collect();
            let station = stations[rng.gen_range(0..stations.len())];
            let obj = items[rng.gen_range(0..items.len())];
            // A fridge destination would re-chill the object on door close.
            let mut banned = vec![station];
            banned.extend(find_cat(world, Category::Fridge));
            let dest = dest_for(obj, &banned, rng)?;
            Some((
                template,
                vec![
                    goto(obj),
                    sg(SubgoalType::PickupObject, obj, None),
                    goto(station),
                    sg(SubgoalType::HeatObject, obj, Some(station)),
                    goto(dest),
                    sg(SubgoalType::PutObject, obj, Some(dest)),
                ],
                vec![
                    GoalCondition::Flag {
                        obj,
                        flag: FlagKind::Heated,
                    },
                    GoalCondition::In { obj, recep: dest },
                ],
            ))
        }
        TaskTemplate::CoolAndPlace => {
            let fridge = find_cat(world, Category::Fridge)?;
            let obj = items[rng.gen_range(0..items.len())];
            let dest = dest_for(obj, &[fridge], rng)?;
            Some((
                template,
                vec![
                    goto(obj),
                    sg(SubgoalType::PickupObject, obj, None),
                    goto(fridge),
                    sg(SubgoalType::CoolObject, obj, Some(fridge)),
                    goto(dest),
                    sg(SubgoalType::PutObject, obj, Some(dest)),
                ],
                vec![
                    GoalCondition::Flag {
                        obj,
                        flag: FlagKind::Cooled,
                    },
                    GoalCondition::In { obj, recep: dest },
                ],
            ))
        }
        TaskTemplate::SliceAndPlace => {
            let knife = items
                .iter()
                .copied()
                .find(|&id| world.objects[id].category == Category::Knife)?;
            let targets: Vec<usize> = items
                .iter()
                .copied()
                .filter(|&id| world.objects[id].category.sliceable())
                .collect();
            let target = targets[rng.gen_range(0..targets.len())];
            let dest = dest_for(knife, &[], rng)?;
            Some((
                template,
                vec![
                    goto(knife),
                    sg(SubgoalType::PickupObject, knife, None),
                    goto(target),
                    sg(SubgoalType::SliceObject, target, Some(knife)),
                    goto(dest),
                    sg(SubgoalType::PutObject, knife, Some(dest)),
                ],
                vec![
                    GoalCondition::Flag {
                        obj: target,
                        flag: FlagKind::Sliced,
                    },
                    GoalCondition::In {
                        obj: knife,
                        recep: dest,
                    },
                ],
            ))
        }
        TaskTemplate::Examine => {
            let lamp = find_cat(world, Category::Lamp)?;
            let obj = items[rng.gen_range(0..items.len())];
            Some((
                template,
                vec![
                    goto(obj),
                    sg(SubgoalType::PickupObject, obj, None),
                    goto(lamp),
                    sg(SubgoalType::ToggleObject, lamp, None),
                ],
                vec![
                    GoalCondition::Flag {
                        obj: lamp,
                        flag: FlagKind::ToggledOn,
                    },
                    GoalCondition::Held { obj },
                ],
            ))
        }
    }
}

/// Generate one achievable episode; resamples internally up to a bounded
/// retry count before giving up.
pub fn generate_episode(seed: u64, split: SplitTag) -> Result<Episode> {
    let pool = split.layout_pool();
    for attempt in 0..GENERATION_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, attempt as u64));
        let layout_id = pool.start + rng.gen_range(0..pool.end - pool.start);
        let world = build_world(seed, layout_id, split, &mut rng);
        let Some((template, subgoals, goal_conditions)) = sample_task(&world, &mut rng) else {
            continue;
        };
        let rendered = render_instructions(&world, template, &subgoals, mix_seed(seed, 0x77) );
        let task = TaskSpec {
            template,
            goal_statement: rendered.goal,
            step_instructions: rendered.steps,
            subgoals,
            goal_conditions,
        };
        let (met, total) = goal_conditions_met(&world, &task);
        if met == total {
            continue; // trivially satisfied draw; resample
        }
        match plan_oracle(&world, &task) {
            Ok(trajectory) => {
                return Ok(Episode {
                    seed,
                    split,
                    layout_id,
                    world,
                    task,
                    trajectory,
                })
            }
            Err(WorldError::Planning(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(WorldError::Generation(format!(
        "no achievable episode after {GENERATION_ATTEMPTS} attempts (seed {seed}, {split:?})"
    )))
}

/// Generate a whole split; episode i is independent of all others.
pub fn generate_split(base_seed: u64, split: SplitTag, count: usize) -> Result<Vec<Episode>> {
    (0..count)
        .map(|i| generate_episode(mix_seed(base_seed ^ split.salt(), i as u64), split))
        .collect()
}

/// Write one pretty JSON document per episode under `dir/<split>/`.
pub fn export_split(dir: &Path, split: SplitTag, episodes: &[Episode]) -> Result<()> {
    let split_dir = dir.join(split.dir_name());
    fs::create_dir_all(&split_dir)?;
    for (i, ep) in episodes.iter().enumerate() {
        let path = split_dir.join(format!("ep_{i:05}.json"));
        fs::write(path, serde_json::to_string_pretty(ep)?)?;
    }
    Ok(())
}

/// Load a split directory back, in filename order.
pub fn load_split(dir: &Path, split: SplitTag) -> Result<Vec<Episode>> {
    let split_dir = dir.join(split.dir_name());
    let mut paths: Vec<_> = fs::read_dir(&split_dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().map(|e| e == "json").unwrap_or(false))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| Ok(serde_json::from_str(&fs::read_to_string(p)?)?))
        .collect()
}
