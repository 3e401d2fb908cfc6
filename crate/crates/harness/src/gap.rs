use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vam_world::{mix_seed, SplitTag};

use crate::config::RunConfig;
use crate::dataset::Dataset;
use crate::metrics::{evaluate, sample_std, spearman};
use crate::rollout::RolloutLimits;
use crate::Result;

pub const GAP_SEED_SALT: u64 = 0x6a50;

/// One seed of the validation/test gap study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedRow {
    pub seed_index: usize,
    pub model_seed: u64,
    pub valid_unseen_sr: f64,
    pub valid_unseen_gc: f64,
    pub test_unseen_sr: f64,
    pub test_unseen_gc: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapStudyReport {
    pub seed: u64,
    pub config_hash: String,
    pub seeds: usize,
    pub rows: Vec<SeedRow>,
    /// Index (into `rows`) of the seed with the best validation SR; ties go
    /// to the lowest index.
    pub selected_seed_index: usize,
    pub selected_test_sr: f64,
    pub best_test_sr: f64,
    /// best_test_sr - selected_test_sr; zero when validation ranking picks a
    /// test-optimal seed, and zero by definition for a single seed.
    pub selection_regret: f64,
    /// Spearman rank correlation between validation and test SR across seeds.
    pub spearman_val_test: f64,
    pub valid_unseen_sr_std: f64,
    pub test_unseen_sr_std: f64,
}

/// Train `k` models that differ only in initialization/shuffling seed,
/// evaluate each on valid_unseen and test_unseen, and report how well
/// validation ranking predicts test ranking.
pub fn gap_study(
    config: &RunConfig,
    dataset: &Dataset,
    k: usize,
    run_dir: Option<&Path>,
) -> Result<GapStudyReport> {
    config.validate()?;
    if k == 0 {
        return Err(crate::HarnessError::Config(
            "gap study needs at least one seed".into(),
        ));
    }
    dataset.assert_test_splits_unread()?;
    let train_eps = dataset.split(SplitTag::Train);
    let val_eps = dataset.split(SplitTag::ValidUnseen);
    let test_eps = dataset.split(SplitTag::TestUnseen);
    let limits = RolloutLimits::from_config(config);
    let vocab = vam_world::Vocab::builtin();
    let base = mix_seed(config.seed, GAP_SEED_SALT);
    let rows: Vec<SeedRow> = (0..k)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&i| {
            let model_seed = mix_seed(base, i as u64);
            let seed_dir = run_dir.map(|d| d.join(format!("seed_{i:02}")));
            if let Some(d) = &seed_dir {
                std::fs::create_dir_all(d)?;
            }
            let artifacts =
                crate::train::train_episodes(config, train_eps, model_seed, seed_dir.as_deref())?;
            let val = evaluate(
                &artifacts.model,
                &vocab,
                SplitTag::ValidUnseen,
                val_eps,
                &limits,
            )?;
            let test = evaluate(
                &artifacts.model,
                &vocab,
                SplitTag::TestUnseen,
                test_eps,
                &limits,
            )?;
            Ok(SeedRow {
                seed_index: i,
                model_seed,
                valid_unseen_sr: val.metrics.success_rate,
                valid_unseen_gc: val.metrics.goal_condition_rate,
                test_unseen_sr: test.metrics.success_rate,
                test_unseen_gc: test.metrics.goal_condition_rate,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut selected = 0usize;
    for (i, row) in rows.iter().enumerate() {
        if row.valid_unseen_sr > rows[selected].valid_unseen_sr {
            selected = i;
        }
    }
    let selected_test_sr = rows[selected].test_unseen_sr;
    let best_test_sr = rows
        .iter()
        .map(|r| r.test_unseen_sr)
        .fold(f64::NEG_INFINITY, f64::max);
    let vals: Vec<f64> = rows.iter().map(|r| r.valid_unseen_sr).collect();
    let tests: Vec<f64> = rows.iter().map(|r| r.test_unseen_sr).collect();
    Ok(GapStudyReport {
        seed: config.seed,
        config_hash: config.hash(),
        seeds: k,
        rows,
        selected_seed_index: selected,
        selected_test_sr,
        best_test_sr,
        selection_regret: best_test_sr - selected_test_sr,
        spearman_val_test: spearman(&vals, &tests),
        valid_unseen_sr_std: sample_std(&vals),
        test_unseen_sr_std: sample_std(&tests),
    })
}

/// Flattened CSV form of the per-seed table.
pub fn gap_csv(report: &GapStudyReport) -> String {
    let mut out = String::from(
        "seed_index,model_seed,valid_unseen_sr,valid_unseen_gc,test_unseen_sr,test_unseen_gc\n",
    );
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.seed_index,
            r.model_seed,
            r.valid_unseen_sr,
            r.valid_unseen_gc,
            r.test_unseen_sr,
            r.test_unseen_gc
        ));
    }
    out
}
