use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vam_agent::{batch_action_accuracy, compute_loss, examples_from_episode, Model, StepExample};
use vam_tensor::{AdamW, Tape};
use vam_world::{mix_seed, Episode, SplitTag, Vocab};

use crate::config::RunConfig;
use crate::dataset::Dataset;
use crate::error::HarnessError;
use crate::Result;

/// Seed-derivation salts: one master seed fans out into independent
/// streams for parameter init and epoch shuffling.
pub const MODEL_SEED_SALT: u64 = 0x0d_e1;
pub const SHUFFLE_SEED_SALT: u64 = 0x5_4f1e;

/// A finished training run.
pub struct TrainArtifacts {
    pub model: Model,
    /// (optimizer step, batch loss) pairs, one per step.
    pub losses: Vec<(usize, f64)>,
    /// Teacher-forced action accuracy over the train set after training.
    pub final_accuracy: f64,
}

/// Teacher-forcing training on explicit episodes with an explicit model
/// seed; the building block for ablation rows and gap-study seeds.
/// Checkpoints land under `run_dir/checkpoints/` when a directory is given.
pub fn train_episodes(
    config: &RunConfig,
    episodes: &[Episode],
    model_seed: u64,
    run_dir: Option<&Path>,
) -> Result<TrainArtifacts> {
    config.validate()?;
    if episodes.is_empty() {
        return Err(HarnessError::Training("no training episodes".into()));
    }
    let vocab = Vocab::builtin();
    if config.model.vocab_size != vocab.len() {
        return Err(HarnessError::Config(format!(
            "model.vocab_size {} does not match the built-in vocabulary ({})",
            config.model.vocab_size,
            vocab.len()
        )));
    }
    let model = Model::new(config.model.clone(), model_seed)?;
    let per_episode: Vec<Vec<StepExample>> = episodes
        .iter()
        .map(|ep| examples_from_episode(ep, &vocab))
        .collect::<vam_agent::Result<_>>()?;
    train_loop(config, model, episodes, &per_episode, run_dir)
}

/// Standard entry point: train on the dataset's train split with the
/// config's derived model seed. Training may not have observed test data.
pub fn train(config: &RunConfig, dataset: &Dataset, run_dir: Option<&Path>) -> Result<TrainArtifacts> {
    dataset.assert_test_splits_unread()?;
    let episodes = dataset.split(SplitTag::Train);
    train_episodes(
        config,
        episodes,
        mix_seed(config.seed, MODEL_SEED_SALT),
        run_dir,
    )
}

fn train_loop(
    config: &RunConfig,
    mut model: Model,
    episodes: &[Episode],
    per_episode: &[Vec<StepExample>],
    run_dir: Option<&Path>,
) -> Result<TrainArtifacts> {
    let mut optimizer = AdamW::new(config.optimizer.clone());
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, SHUFFLE_SEED_SALT));
    let mut losses: Vec<(usize, f64)> = Vec::new();
    let mut step = 0usize;
    let total_steps = config.epochs * episodes.len().div_ceil(config.batch_episodes);
    let base_lr = config.optimizer.lr;
    if let Some(dir) = run_dir {
        std::fs::create_dir_all(dir.join("checkpoints"))?;
    }
    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..episodes.len()).collect();
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(config.batch_episodes) {
            let batch: Vec<StepExample> = chunk
                .iter()
                .flat_map(|&i| per_episode[i].iter().cloned())
                .collect();
            let mut tape = Tape::new();
            let loss_id = compute_loss(&model, &mut tape, &batch)?;
            let loss = tape.value(loss_id).item();
            if !loss.is_finite() {
                let seeds: Vec<u64> = chunk.iter().map(|&i| episodes[i].seed).collect();
                return Err(HarnessError::Training(format!(
                    "non-finite loss {loss} at epoch {epoch}, step {step}; \
                     batch of {} steps from episode seeds {seeds:?}",
                    batch.len()
                )));
            }
            model.params.zero_grad();
            tape.backward(loss_id, &mut model.params)?;
            // Cosine anneal from base_lr down to base_lr * lr_min_fraction.
            let cosine = 0.5 * (1.0 + (std::f64::consts::PI * step as f64 / total_steps as f64).cos());
            optimizer.cfg.lr =
                base_lr * (config.lr_min_fraction + (1.0 - config.lr_min_fraction) * cosine);
            optimizer.step(&mut model.params);
            losses.push((step, loss));
            step += 1;
        }
        if let Some(dir) = run_dir {
            let stem = dir.join("checkpoints").join(format!("epoch_{epoch:03}"));
            model.save(&stem)?;
        }
    }
    if let Some(dir) = run_dir {
        model.save(&dir.join("model"))?;
        write_loss_curve(&losses, &dir.join("loss_curve.csv"))?;
    }
    let all: Vec<StepExample> = per_episode.iter().flatten().cloned().collect();
    let final_accuracy = batch_action_accuracy(&model, &all)?;
    Ok(TrainArtifacts {
        model,
        losses,
        final_accuracy,
    })
}

/// CSV loss curve, one `step,loss` row per optimizer step.
pub fn write_loss_curve(losses: &[(usize, f64)], path: &Path) -> Result<()> {
    let mut text = String::from("step,loss\n");
    for (step, loss) in losses {
        text.push_str(&format!("{step},{loss}\n"));
    }
    std::fs::write(path, text)?;
    Ok(())
}
