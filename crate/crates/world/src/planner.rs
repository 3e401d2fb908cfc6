use serde::{Deserialize, Serialize};

use crate::action::{Action, ActionKind, Heading};
use crate::task::{goal_conditions_met, Subgoal, SubgoalType, TaskSpec};
use crate::world::World;
use crate::{Result, WorldError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajStep {
    /// Hash of the world the action was chosen in.
    pub pre_hash: String,
    pub action: Action,
    /// Index into the task's subgoal list.
    pub subgoal: usize,
}

/// Expert demonstration: actions with world-state hashes and subgoal labels,
/// always ending in Stop. Observations are recomputed by replay, not stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<TrajStep>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Breadth-first distances over traversable cells; visit order N,E,S,W so
/// the field is deterministic.
fn bfs_distances(world: &World, start: (usize, usize)) -> Vec<Option<u32>> {
    let mut dist = vec![None; world.width * world.height];
    let mut queue = std::collections::VecDeque::new();
    dist[world.cell_index(start.0, start.1)] = Some(0);
    queue.push_back(start);
    while let Some((x, y)) = queue.pop_front() {
        let d = dist[world.cell_index(x, y)].expect("queued cells have distance");
        for h in Heading::ALL {
            let (dx, dy) = h.delta();
            let (nx, ny) = (x as i32 + dx, y as i32 + dy);
            if !world.traversable(nx, ny) {
                continue;
            }
            let idx = world.cell_index(nx as usize, ny as usize);
            if dist[idx].is_none() {
                dist[idx] = Some(d + 1);
                queue.push_back((nx as usize, ny as usize));
            }
        }
    }
    dist
}

fn rotation_actions(from: Heading, to: Heading) -> Vec<Action> {
    match (to.index() + 4 - from.index()) % 4 {
        0 => vec![],
        1 => vec![Action::nav(ActionKind::TurnRight)],
        3 => vec![Action::nav(ActionKind::TurnLeft)],
        _ => vec![
            Action::nav(ActionKind::TurnRight),
            Action::nav(ActionKind::TurnRight),
        ],
    }
}

/// Navigation actions that leave the agent in a traversable cell adjacent to
/// the target, facing it, at the camera pitch its height requires.
fn plan_goto(world: &World, target_id: usize) -> Result<Vec<Action>> {
    let target = world.object(target_id)?;
    let t = target.position;
    let dist = bfs_distances(world, (world.agent.x, world.agent.y));

    // Candidate standing cells: traversable neighbors of the target, facing
    // it. Lowest (distance, cell index) wins.
    let mut best: Option<(u32, usize, (usize, usize), Heading)> = None;
    for h in Heading::ALL {
        let (dx, dy) = h.delta();
        let (sx, sy) = (t.0 as i32 - dx, t.1 as i32 - dy);
        if !world.traversable(sx, sy) {
            continue;
        }
        let cell = (sx as usize, sy as usize);
        let idx = world.cell_index(cell.0, cell.1);
        if let Some(d) = dist[idx] {
            let key = (d, idx);
            if best.map(|(bd, bi, _, _)| key < (bd, bi)).unwrap_or(true) {
                best = Some((d, idx, cell, h));
            }
        }
    }
    let Some((_, _, stand, face)) = best else {
        return Err(WorldError::Planning(format!(
            "no reachable cell faces object {target_id}"
        )));
    };

    // Reconstruct the path by walking the distance field back from the
    // standing cell; ties break to the lowest cell index.
    let mut path = vec![stand];
    let mut cur = stand;
    while dist[world.cell_index(cur.0, cur.1)] != Some(0) {
        let d = dist[world.cell_index(cur.0, cur.1)].expect("on path");
        let mut pred: Option<(usize, (usize, usize))> = None;
        for h in Heading::ALL {
            let (dx, dy) = h.delta();
            let (px, py) = (cur.0 as i32 + dx, cur.1 as i32 + dy);
            if !world.traversable(px, py) {
                continue;
            }
            let idx = world.cell_index(px as usize, py as usize);
            if dist[idx] == Some(d - 1) && pred.map(|(pi, _)| idx < pi).unwrap_or(true) {
                pred = Some((idx, (px as usize, py as usize)));
            }
        }
        cur = pred.expect("distance field is connected").1;
        path.push(cur);
    }
    path.reverse();

    let mut actions = Vec::new();
    let mut heading = world.agent.heading;
    for pair in path.windows(2) {
        let (from, to) = (pair[0], pair[1]);
        let need = Heading::ALL
            .into_iter()
            .find(|h| {
                let (dx, dy) = h.delta();
                (from.0 as i32 + dx, from.1 as i32 + dy) == (to.0 as i32, to.1 as i32)
            })
            .expect("adjacent path cells");
        actions.extend(rotation_actions(heading, need));
        heading = need;
        actions.push(Action::nav(ActionKind::MoveForward));
    }
    actions.extend(rotation_actions(heading, face));

    let want_pitch = world.effective_height(target).pitch();
    let mut pitch = world.agent.pitch;
    while pitch < want_pitch {
        actions.push(Action::nav(ActionKind::LookUp));
        pitch += 1;
    }
    while pitch > want_pitch {
        actions.push(Action::nav(ActionKind::LookDown));
        pitch -= 1;
    }
    Ok(actions)
}

/// Manipulation schema for one subgoal; assumes the preceding GotoLocation
/// already positioned the agent before the relevant object.
fn plan_manipulation(world: &World, sg: &Subgoal) -> Result<Vec<Action>> {
    let aux = |sg: &Subgoal| {
        sg.aux.ok_or_else(|| {
            WorldError::Planning(format!("{:?} subgoal missing its station", sg.kind))
        })
    };
    Ok(match sg.kind {
        SubgoalType::GotoLocation => unreachable!("handled by plan_goto"),
        SubgoalType::PickupObject => {
            let mut actions = Vec::new();
            let obj = world.object(sg.arg)?;
            let closed_container = match obj.container {
                Some(cid) => {
                    let c = world.object(cid)?;
                    (c.category.openable() && !c.flags.open).then_some(cid)
                }
                None => None,
            };
            if let Some(cid) = closed_container {
                actions.push(Action::manip(ActionKind::Open, cid));
            }
            actions.push(Action::manip(ActionKind::Pickup, sg.arg));
            if let Some(cid) = closed_container {
                actions.push(Action::manip(ActionKind::Close, cid));
            }
            actions
        }
        SubgoalType::PutObject => {
            let recep_id = aux(sg)?;
            let recep = world.object(recep_id)?;
            if recep.category.openable() && !recep.flags.open {
                vec![
                    Action::manip(ActionKind::Open, recep_id),
                    Action::manip(ActionKind::Put, recep_id),
                    Action::manip(ActionKind::Close, recep_id),
                ]
            } else {
                vec![Action::manip(ActionKind::Put, recep_id)]
            }
        }
        SubgoalType::CleanObject | SubgoalType::HeatObject => {
            // Hold the object up to the station and run it once.
            let station = aux(sg)?;
            vec![
                Action::manip(ActionKind::ToggleOn, station),
                Action::manip(ActionKind::ToggleOff, station),
            ]
        }
        SubgoalType::CoolObject => {
            // Chill in the fridge: shut it on the object, then retrieve.
            let fridge = aux(sg)?;
            vec![
                Action::manip(ActionKind::Open, fridge),
                Action::manip(ActionKind::Put, fridge),
                Action::manip(ActionKind::Close, fridge),
                Action::manip(ActionKind::Open, fridge),
                Action::manip(ActionKind::Pickup, sg.arg),
                Action::manip(ActionKind::Close, fridge),
            ]
        }
        SubgoalType::SliceObject => vec![Action::manip(ActionKind::Slice, sg.arg)],
        SubgoalType::ToggleObject => vec![Action::manip(ActionKind::ToggleOn, sg.arg)],
    })
}

/// Deterministic expert plan: shortest-path navigation legs plus fixed
/// manipulation schemas, verified by execution as it is built.
pub fn plan_oracle(world: &World, task: &TaskSpec) -> Result<Trajectory> {
    let mut w = world.clone();
    let mut steps = Vec::new();
    let last_subgoal = task.subgoals.len().saturating_sub(1);

    let (met, total) = goal_conditions_met(&w, task);
    if met == total {
        steps.push(TrajStep {
            pre_hash: w.hash(),
            action: Action::stop(),
            subgoal: last_subgoal,
        });
        return Ok(Trajectory { steps });
    }

    for (idx, sg) in task.subgoals.iter().enumerate() {
        let actions = match sg.kind {
            SubgoalType::GotoLocation => plan_goto(&w, sg.arg)?,
            _ => plan_manipulation(&w, sg)?,
        };
        for action in actions {
            let pre_hash = w.hash();
            let (next, ok) = w.step(&action)?;
            if !ok {
                return Err(WorldError::Planning(format!(
                    "planned action {action:?} failed during subgoal {idx} ({:?})",
                    sg.kind
                )));
            }
            w = next;
            steps.push(TrajStep {
                pre_hash,
                action,
                subgoal: idx,
            });
        }
    }

    let (met, total) = goal_conditions_met(&w, task);
    if met != total {
        return Err(WorldError::Planning(format!(
            "plan left {met}/{total} goal conditions met"
        )));
    }
    steps.push(TrajStep {
        pre_hash: w.hash(),
        action: Action::stop(),
        subgoal: last_subgoal,
    });
    Ok(Trajectory { steps })
}

/// Execute a trajectory from the initial world, verifying every stored hash
/// and that no planned action fails. Returns the final world.
pub fn replay(world: &World, traj: &Trajectory) -> Result<World> {
    let mut w = world.clone();
    for (i, step) in traj.steps.iter().enumerate() {
        if w.hash() != step.pre_hash {
            return Err(WorldError::Replay(format!(
                "hash mismatch before step {i} ({:?})",
                step.action.kind
            )));
        }
        let (next, ok) = w.step(&step.action)?;
        if !ok {
            return Err(WorldError::Replay(format!(
                "recorded action {:?} failed at step {i}",
                step.action.kind
            )));
        }
        w = next;
    }
    Ok(w)
}

/// Worlds as they stood before each trajectory step, for teacher forcing.
pub fn replay_worlds(world: &World, traj: &Trajectory) -> Result<Vec<World>> {
    let mut states = Vec::with_capacity(traj.steps.len());
    let mut w = world.clone();
    for step in &traj.steps {
        states.push(w.clone());
        let (next, ok) = w.step(&step.action)?;
        if !ok {
            return Err(WorldError::Replay(format!(
                "recorded action {:?} failed",
                step.action.kind
            )));
        }
        w = next;
    }
    Ok(states)
}
