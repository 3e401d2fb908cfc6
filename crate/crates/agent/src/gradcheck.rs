use vam_tensor::Tape;
use vam_world::{generate_episode, mix_seed, SplitTag, Vocab};

use crate::config::{AblationFlags, ModelConfig};
use crate::data::{examples_from_episode, StepExample};
use crate::loss::compute_loss;
use crate::model::Model;
use crate::Result;

/// Central-difference step, matching the tensor-level suite.
pub const DEFAULT_STEP: f64 = 1e-5;

fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / (a.abs() + n.abs()).max(1e-6)
}

fn loss_value(model: &Model, examples: &[StepExample]) -> Result<f64> {
    let mut tape = Tape::new();
    let loss = compute_loss(model, &mut tape, examples)?;
    Ok(tape.value(loss).item())
}

/// Compare the backward-pass gradient of `compute_loss` against central
/// finite differences for every parameter coordinate. Returns the largest
/// relative error. The model is restored to its original values.
pub fn loss_grad_max_rel_err(
    model: &mut Model,
    examples: &[StepExample],
    h: f64,
) -> Result<f64> {
    model.params.zero_grad();
    let mut tape = Tape::new();
    let loss = compute_loss(model, &mut tape, examples)?;
    tape.backward(loss, &mut model.params)?;
    let ids: Vec<_> = model.params.ids().collect();
    let analytic: Vec<Vec<f64>> = ids
        .iter()
        .map(|&id| {
            let len = model.params.value(id).numel();
            model
                .params
                .grad(id)
                .map(|g| g.to_vec())
                .unwrap_or_else(|_| vec![0.0; len])
        })
        .collect();
    let mut max_rel: f64 = 0.0;
    for (slot, &id) in ids.iter().enumerate() {
        for j in 0..model.params.value(id).numel() {
            let original = model.params.value(id).data[j];
            model.params.value_mut(id).data[j] = original + h;
            let plus = loss_value(model, examples)?;
            model.params.value_mut(id).data[j] = original - h;
            let minus = loss_value(model, examples)?;
            model.params.value_mut(id).data[j] = original;
            let numeric = (plus - minus) / (2.0 * h);
            max_rel = max_rel.max(relative_error(analytic[slot][j], numeric));
        }
    }
    Ok(max_rel)
}

/// A deliberately small configuration so exhaustive finite differences stay
/// fast while exercising every component of the given ablation row.
pub fn tiny_config(row: usize) -> ModelConfig {
    ModelConfig {
        hidden: 6,
        language_layers: 1,
        cross_layers: 1,
        history_window: 2,
        max_tokens: 32,
        flags: AblationFlags::row(row),
        ..ModelConfig::default()
    }
}

/// Outcome of the full-loss finite-difference suite.
#[derive(Debug, Clone)]
pub struct LossCheckReport {
    pub instances: usize,
    pub max_rel_err: f64,
}

/// Run `instances` independent checks of the full `compute_loss` gradient,
/// cycling through the four ablation rows, each on a fresh tiny model and a
/// small teacher-forced batch from a generated episode.
pub fn run_loss_gradcheck(seed: u64, instances: usize) -> Result<LossCheckReport> {
    let vocab = Vocab::builtin();
    let mut max_rel: f64 = 0.0;
    for i in 0..instances {
        let row = 1 + (i % 4);
        let mut model = Model::new(tiny_config(row), mix_seed(seed, i as u64))?;
        let ep = generate_episode(mix_seed(seed ^ 0x5eed, i as u64), SplitTag::Train)?;
        let all = examples_from_episode(&ep, &vocab)?;
        // A compact batch that still hits every loss term: the first
        // navigation step, the first object-carrying step, and the final
        // Stop step.
        let mut batch: Vec<StepExample> = Vec::new();
        if let Some(nav) = all.iter().find(|e| e.target_type == 0) {
            batch.push(nav.clone());
        }
        if let Some(manip) = all.iter().find(|e| e.target_category.is_some()) {
            batch.push(manip.clone());
        }
        batch.push(all.last().expect("trajectory never empty").clone());
        let rel = loss_grad_max_rel_err(&mut model, &batch, DEFAULT_STEP)?;
        max_rel = max_rel.max(rel);
    }
    Ok(LossCheckReport {
        instances,
        max_rel_err: max_rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_loss_gradient_matches_finite_differences() {
        let report = run_loss_gradcheck(905, 4).unwrap();
        assert_eq!(report.instances, 4);
        assert!(
            report.max_rel_err < 1e-4,
            "max relative error {} too large",
            report.max_rel_err
        );
    }
}
