use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vam_world::{replay_worlds, Episode, SplitTag, SubgoalType, Vocab, World, SUBGOAL_TYPES};

use vam_agent::Model;

use crate::error::HarnessError;
use crate::policy::{ModelPolicy, Policy};
use crate::rollout::{rollout, rollout_subgoal, RolloutLimits};
use crate::Result;

/// One evaluated episode, enough to recount every aggregate from scratch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeEval {
    pub index: usize,
    pub episode_seed: u64,
    pub success: bool,
    pub met_conditions: usize,
    pub total_conditions: usize,
    pub steps: usize,
    pub failures: usize,
}

/// Aggregates for one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub split: SplitTag,
    pub episodes: usize,
    pub successes: usize,
    pub met_conditions: usize,
    pub total_conditions: usize,
    /// Percentage of episodes with every goal condition met.
    pub success_rate: f64,
    /// Percentage of individual goal conditions met, pooled over episodes.
    pub goal_condition_rate: f64,
}

/// A full evaluation of one split, keeping the final worlds so the
/// aggregates can be independently recounted.
pub struct EvalOutcome {
    pub metrics: SplitMetrics,
    pub episodes: Vec<EpisodeEval>,
    pub final_worlds: Vec<World>,
}

/// Compute SR and GC from per-episode counts.
pub fn rates(successes: usize, episodes: usize, met: usize, total: usize) -> (f64, f64) {
    let sr = 100.0 * successes as f64 / episodes as f64;
    let gc = 100.0 * met as f64 / total as f64;
    (sr, gc)
}

/// Evaluate a policy on a split: one independent closed-loop rollout per
/// episode, in parallel, merged back in episode order.
pub fn evaluate_policy<P, F>(
    factory: F,
    split: SplitTag,
    episodes: &[Episode],
    limits: &RolloutLimits,
) -> Result<EvalOutcome>
where
    P: Policy,
    F: Fn(usize) -> P + Sync,
{
    if episodes.is_empty() {
        return Err(HarnessError::Evaluation(format!(
            "cannot evaluate an empty split ({})",
            split.dir_name()
        )));
    }
    let outcomes: Vec<(EpisodeEval, World)> = episodes
        .par_iter()
        .enumerate()
        .map(|(index, ep)| {
            let mut policy = factory(index);
            let out = rollout(&mut policy, ep, limits)?;
            Ok((
                EpisodeEval {
                    index,
                    episode_seed: ep.seed,
                    success: out.success,
                    met_conditions: out.met_conditions,
                    total_conditions: out.total_conditions,
                    steps: out.trajectory.len(),
                    failures: out.failures,
                },
                out.final_world,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let (episodes_eval, final_worlds): (Vec<EpisodeEval>, Vec<World>) =
        outcomes.into_iter().unzip();
    let successes = episodes_eval.iter().filter(|e| e.success).count();
    let met = episodes_eval.iter().map(|e| e.met_conditions).sum();
    let total = episodes_eval.iter().map(|e| e.total_conditions).sum();
    let (success_rate, goal_condition_rate) = rates(successes, episodes_eval.len(), met, total);
    Ok(EvalOutcome {
        metrics: SplitMetrics {
            split,
            episodes: episodes_eval.len(),
            successes,
            met_conditions: met,
            total_conditions: total,
            success_rate,
            goal_condition_rate,
        },
        episodes: episodes_eval,
        final_worlds,
    })
}

/// Evaluate a trained model on a split.
pub fn evaluate(
    model: &Model,
    vocab: &Vocab,
    split: SplitTag,
    episodes: &[Episode],
    limits: &RolloutLimits,
) -> Result<EvalOutcome> {
    evaluate_policy(|_| ModelPolicy::new(model, vocab), split, episodes, limits)
}

/// One row of the per-subgoal success table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubgoalRow {
    pub kind: SubgoalType,
    pub attempts: usize,
    pub successes: usize,
    /// Percentage of attempts that achieved the subgoal's effect.
    pub success_rate: f64,
    /// This type's share of all subgoal instances, in percent.
    pub share: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubgoalReport {
    pub split: SplitTag,
    pub total_instances: usize,
    pub rows: Vec<SubgoalRow>,
}

/// Per-subgoal evaluation by oracle repositioning: each subgoal starts from
/// the oracle trajectory's state at that subgoal and is rolled out alone.
pub fn subgoal_report(
    model: &Model,
    vocab: &Vocab,
    split: SplitTag,
    episodes: &[Episode],
    limits: &RolloutLimits,
) -> Result<SubgoalReport> {
    if episodes.is_empty() {
        return Err(HarnessError::Evaluation(format!(
            "cannot evaluate an empty split ({})",
            split.dir_name()
        )));
    }
    let per_episode: Vec<Vec<(SubgoalType, bool)>> = episodes
        .par_iter()
        .map(|ep| {
            let worlds = replay_worlds(&ep.world, &ep.trajectory)?;
            let mut results = Vec::new();
            let steps = &ep.trajectory.steps;
            let mut start = 0usize;
            while start < steps.len() {
                let subgoal_index = steps[start].subgoal;
                let mut end = start;
                while end < steps.len() && steps[end].subgoal == subgoal_index {
                    end += 1;
                }
                let prefix: Vec<usize> =
                    steps[..start].iter().map(|s| s.action.kind.index()).collect();
                let mut policy = ModelPolicy::new(model, vocab);
                let ok = rollout_subgoal(
                    &mut policy,
                    &worlds[start],
                    &ep.task,
                    subgoal_index,
                    &prefix,
                    end - start,
                    limits,
                )?;
                results.push((ep.task.subgoals[subgoal_index].kind, ok));
                start = end;
            }
            Ok(results)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut attempts = vec![0usize; SUBGOAL_TYPES.len()];
    let mut successes = vec![0usize; SUBGOAL_TYPES.len()];
    for results in &per_episode {
        for &(kind, ok) in results {
            let slot = SUBGOAL_TYPES
                .iter()
                .position(|&k| k == kind)
                .expect("known subgoal type");
            attempts[slot] += 1;
            successes[slot] += ok as usize;
        }
    }
    let total_instances: usize = attempts.iter().sum();
    let rows = SUBGOAL_TYPES
        .iter()
        .enumerate()
        .filter(|(slot, _)| attempts[*slot] > 0)
        .map(|(slot, &kind)| SubgoalRow {
            kind,
            attempts: attempts[slot],
            successes: successes[slot],
            success_rate: 100.0 * successes[slot] as f64 / attempts[slot] as f64,
            share: 100.0 * attempts[slot] as f64 / total_instances as f64,
        })
        .collect();
    Ok(SubgoalReport {
        split,
        total_instances,
        rows,
    })
}

/// Average ranks (1-based), ties sharing their mean rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .expect("finite metric values")
            .then(a.cmp(&b))
    });
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &slot in &order[i..=j] {
            out[slot] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0; // a constant column carries no ordering information
    }
    cov / (va.sqrt() * vb.sqrt())
}

/// Spearman rank correlation with tie-averaged ranks; 0.0 when either
/// column is constant (no ordering information).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "columns must pair up");
    if a.len() < 2 {
        return 0.0;
    }
    pearson(&ranks(a), &ranks(b))
}

/// Sample standard deviation (n−1 denominator); 0.0 for fewer than two
/// observations.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    var.sqrt()
}
