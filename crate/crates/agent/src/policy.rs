use vam_tensor::Tape;
use vam_world::{Action, ActionKind, Category, ACTION_KINDS};

use crate::forward::{forward_step, type_index, LanguageContext};
use crate::model::Model;
use crate::Result;

/// Argmax with the lowest index winning ties.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Multiply raw scores by the positive per-type gate weights, mirroring the
/// tensor-side gating exactly: `gated[a] = m[a] · gate[type(a)]`.
pub fn apply_gate(m: &[f64], gate_nav: f64, gate_man: f64) -> Vec<f64> {
    assert_eq!(m.len(), ACTION_KINDS.len());
    m.iter()
        .zip(ACTION_KINDS.iter())
        .map(|(&score, &kind)| {
            score
                * if type_index(kind) == 0 {
                    gate_nav
                } else {
                    gate_man
                }
        })
        .collect()
}

/// Decide one action: argmax over the decision scores (gated when the gate
/// is enabled), lowest index on ties. Manipulation kinds pick the
/// front-visible object whose category logit is highest (first listed wins
/// ties); with nothing visible the action is emitted bare and will simply
/// fail in the environment.
pub fn select_action(
    model: &Model,
    tape: &mut Tape,
    ctx: &LanguageContext,
    history: &[usize],
    features: &[Vec<f64>],
    front_objects: &[(usize, Category)],
) -> Result<Action> {
    let step = forward_step(model, tape, ctx, history, features)?;
    let kind = ACTION_KINDS[argmax_lowest(&tape.value(step.scores).data)];
    if kind == ActionKind::Stop {
        return Ok(Action::stop());
    }
    if type_index(kind) == 0 {
        return Ok(Action::nav(kind));
    }
    let logits = &tape.value(step.object_logits).data;
    let mut best: Option<(usize, f64)> = None;
    for &(id, category) in front_objects {
        let score = logits[category.index()];
        if best.map_or(true, |(_, s)| score > s) {
            best = Some((id, score));
        }
    }
    Ok(Action {
        kind,
        object_arg: best.map(|(id, _)| id),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_gated_argmax_prefers_turn_left() {
        // Raw match scores: MoveForward 0.5, TurnLeft 0.9, Pickup 0.8,
        // everything else far below. A navigation-favoring gate (1.0 vs 0.1)
        // scales Pickup to 0.08, so TurnLeft wins.
        let mut m = vec![-5.0; ACTION_KINDS.len()];
        m[ActionKind::MoveForward.index()] = 0.5;
        m[ActionKind::TurnLeft.index()] = 0.9;
        m[ActionKind::Pickup.index()] = 0.8;
        let gated = apply_gate(&m, 1.0, 0.1);
        assert_eq!(gated[ActionKind::MoveForward.index()], 0.5);
        assert!((gated[ActionKind::Pickup.index()] - 0.08).abs() < 1e-12);
        assert_eq!(argmax_lowest(&gated), ActionKind::TurnLeft.index());
        // Without the gate, Pickup would still lose here, so also check the
        // opposite gate flips the decision to the manipulation action.
        let man_gated = apply_gate(&m, 0.1, 1.0);
        assert_eq!(argmax_lowest(&man_gated), ActionKind::Pickup.index());
    }

    #[test]
    fn uniform_gate_is_the_identity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let m: Vec<f64> = (0..ACTION_KINDS.len())
                .map(|_| rng.gen_range(-2.0..2.0))
                .collect();
            let gated = apply_gate(&m, 1.0, 1.0);
            assert_eq!(gated, m);
            assert_eq!(argmax_lowest(&gated), argmax_lowest(&m));
        }
    }

    #[test]
    fn ties_break_to_the_lowest_index() {
        let mut m = vec![0.0; ACTION_KINDS.len()];
        m[3] = 1.5;
        m[7] = 1.5;
        assert_eq!(argmax_lowest(&m), 3);
    }
}
