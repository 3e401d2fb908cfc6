use vam_tensor::{Tape, TensorId};
use vam_world::CATEGORY_COUNT;

use crate::data::StepExample;
use crate::error::AgentError;
use crate::forward::{encode_language_context, forward_step, LanguageContext};
use crate::model::Model;
use crate::policy::argmax_lowest;
use crate::Result;

/// Mean per-step training loss over a teacher-forced batch:
/// action cross-entropy, plus object-category cross-entropy on steps with
/// an object argument, plus the weighted gate-supervision cross-entropy
/// when the gate is enabled. Distinct instructions within the batch are
/// encoded once each and shared across their steps.
pub fn compute_loss(model: &Model, tape: &mut Tape, examples: &[StepExample]) -> Result<TensorId> {
    if examples.is_empty() {
        return Err(AgentError::Dimension("empty training batch".into()));
    }
    let mut contexts: Vec<(Vec<usize>, LanguageContext)> = Vec::new();
    let mut terms: Vec<TensorId> = Vec::with_capacity(examples.len() * 2);
    for ex in examples {
        if ex.target_kind >= model.config.action_count {
            return Err(AgentError::Label(format!(
                "ground-truth action index {} outside the action set",
                ex.target_kind
            )));
        }
        if ex.target_type > 1 {
            return Err(AgentError::Label(format!(
                "ground-truth action type {} is not navigation/manipulation",
                ex.target_type
            )));
        }
        if let Some(cat) = ex.target_category {
            if cat >= CATEGORY_COUNT {
                return Err(AgentError::Label(format!(
                    "ground-truth category index {cat} outside the category set"
                )));
            }
        }
        let ctx_pos = match contexts.iter().position(|(t, _)| t == &ex.tokens) {
            Some(pos) => pos,
            None => {
                let ctx = encode_language_context(model, tape, &ex.tokens)?;
                contexts.push((ex.tokens.clone(), ctx));
                contexts.len() - 1
            }
        };
        let ctx = &contexts[ctx_pos].1;
        let step = forward_step(model, tape, ctx, &ex.history, &ex.features)?;
        terms.push(tape.cross_entropy(step.scores, &[ex.target_kind])?);
        if let Some(cat) = ex.target_category {
            terms.push(tape.cross_entropy(step.object_logits, &[cat])?);
        }
        if let Some(gate_logits) = step.gate_logits {
            let gate_ce = tape.cross_entropy(gate_logits, &[ex.target_type])?;
            terms.push(tape.scale(gate_ce, model.config.gate_loss_weight));
        }
    }
    let mut total = terms[0];
    for &t in &terms[1..] {
        total = tape.add(total, t)?;
    }
    Ok(tape.scale(total, 1.0 / examples.len() as f64))
}

/// Fraction of examples whose argmax decision equals the ground truth,
/// under teacher forcing. Inference only: builds its own tape.
pub fn batch_action_accuracy(model: &Model, examples: &[StepExample]) -> Result<f64> {
    if examples.is_empty() {
        return Err(AgentError::Dimension("empty accuracy batch".into()));
    }
    // Inference only: a fresh tape per run of examples that share a token
    // sequence keeps memory flat on arbitrarily large batches.
    let mut tape = Tape::new();
    let mut current: Option<(Vec<usize>, LanguageContext)> = None;
    let mut hits = 0usize;
    for ex in examples {
        let stale = match &current {
            Some((tokens, _)) => tokens != &ex.tokens,
            None => true,
        };
        if stale {
            tape = Tape::new();
            let ctx = encode_language_context(model, &mut tape, &ex.tokens)?;
            current = Some((ex.tokens.clone(), ctx));
        }
        let ctx = &current.as_ref().expect("context just set").1;
        let step = forward_step(model, &mut tape, ctx, &ex.history, &ex.features)?;
        let scores = tape.value(step.scores);
        if argmax_lowest(&scores.data) == ex.target_kind {
            hits += 1;
        }
    }
    Ok(hits as f64 / examples.len() as f64)
}
