use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use vam_world::{export_split, generate_split, load_split, Episode, SplitTag};

use crate::config::RunConfig;
use crate::error::HarnessError;
use crate::Result;

fn split_slot(tag: SplitTag) -> usize {
    SplitTag::ALL
        .iter()
        .position(|&s| s == tag)
        .expect("tag in ALL")
}

/// The five split datasets plus per-split read counters. The counters make
/// the evaluation protocol auditable: training and model selection must
/// never touch a test split, and the audit is a runtime fact rather than a
/// convention.
pub struct Dataset {
    splits: Vec<Vec<Episode>>,
    reads: [AtomicUsize; 5],
}

impl Dataset {
    /// Generate all five splits from the config's master seed.
    pub fn generate(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let mut splits = Vec::with_capacity(SplitTag::ALL.len());
        for tag in SplitTag::ALL {
            let count = if tag == SplitTag::Train {
                config.train_episodes
            } else {
                config.eval_episodes
            };
            splits.push(generate_split(config.seed, tag, count)?);
        }
        Ok(Self {
            splits,
            reads: Default::default(),
        })
    }

    /// Write every split under `dir/<split>/ep_xxxxx.json`.
    pub fn export(&self, dir: &Path) -> Result<()> {
        for (slot, tag) in SplitTag::ALL.into_iter().enumerate() {
            export_split(dir, tag, &self.splits[slot])?;
        }
        Ok(())
    }

    /// Load a dataset previously written with [`Dataset::export`].
    pub fn load(dir: &Path) -> Result<Self> {
        let mut splits = Vec::with_capacity(SplitTag::ALL.len());
        for tag in SplitTag::ALL {
            let episodes = load_split(dir, tag)?;
            if episodes.is_empty() {
                return Err(HarnessError::Data(format!(
                    "split {} under {} is empty",
                    tag.dir_name(),
                    dir.display()
                )));
            }
            splits.push(episodes);
        }
        Ok(Self {
            splits,
            reads: Default::default(),
        })
    }

    /// Episodes of one split; counts as a read of that split.
    pub fn split(&self, tag: SplitTag) -> &[Episode] {
        self.reads[split_slot(tag)].fetch_add(1, Ordering::Relaxed);
        &self.splits[split_slot(tag)]
    }

    /// How many times a split has been handed out.
    pub fn read_count(&self, tag: SplitTag) -> usize {
        self.reads[split_slot(tag)].load(Ordering::Relaxed)
    }

    /// Error unless both test splits are still unread. Called by training
    /// and ablation entry points to enforce the evaluation protocol.
    pub fn assert_test_splits_unread(&self) -> Result<()> {
        for tag in [SplitTag::TestSeen, SplitTag::TestUnseen] {
            let n = self.read_count(tag);
            if n != 0 {
                return Err(HarnessError::Data(format!(
                    "split {} was read {n} time(s) before evaluation",
                    tag.dir_name()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self, tag: SplitTag) -> usize {
        self.splits[split_slot(tag)].len()
    }

    pub fn is_empty(&self) -> bool {
        self.splits.iter().all(|s| s.is_empty())
    }
}
