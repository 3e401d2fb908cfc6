//! Orchestration behind the `vam` binary: config loading with dotted-key
//! overrides, run-directory bookkeeping, and one runner per subcommand. All
//! logic lives here so the error paths and artifacts are testable without
//! spawning processes.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use vam_harness::{Dataset, HarnessError, RolloutLimits, RunConfig};
use vam_world::SplitTag;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit codes fixed by contract: CI distinguishes failure classes by code.
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_TRAINING: i32 = 4;
pub const EXIT_EVALUATION: i32 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

/// The phase a harness error escaped from; unclassified errors (I/O, tensor
/// math) inherit the phase's exit code, classified ones keep their own.
#[derive(Debug, Clone, Copy)]
pub enum Phase {
    Config,
    Data,
    Training,
    Evaluation,
}

impl Phase {
    fn code(self) -> i32 {
        match self {
            Phase::Config => EXIT_CONFIG,
            Phase::Data => EXIT_DATA,
            Phase::Training => EXIT_TRAINING,
            Phase::Evaluation => EXIT_EVALUATION,
        }
    }
}

pub fn classify(err: HarnessError, phase: Phase) -> CliError {
    let code = match &err {
        HarnessError::Config(_) => EXIT_CONFIG,
        HarnessError::Data(_) => EXIT_DATA,
        HarnessError::Training(_) => EXIT_TRAINING,
        HarnessError::Evaluation(_) => EXIT_EVALUATION,
        _ => phase.code(),
    };
    CliError {
        code,
        message: err.to_string(),
    }
}

trait InPhase<T> {
    fn in_phase(self, phase: Phase) -> Result<T, CliError>;
}

impl<T> InPhase<T> for Result<T, HarnessError> {
    fn in_phase(self, phase: Phase) -> Result<T, CliError> {
        self.map_err(|e| classify(e, phase))
    }
}

// ---------------------------------------------------------------------------
// Config loading and dotted-key overrides
// ---------------------------------------------------------------------------

/// Parse an override's value: JSON when it parses (numbers, booleans,
/// arrays), bare string otherwise, so `model.hidden=768` and
/// `run_tag=sweep1` both do the obvious thing.
fn parse_override_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Deep-merge `patch` over `base`: objects merge recursively, everything
/// else replaces. Keys unknown to the config survive the merge and are
/// rejected later by deserialization, which names them.
fn deep_merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(base_map), Value::Object(patch_map)) => {
            for (key, value) in patch_map {
                match base_map.get_mut(&key) {
                    Some(slot) => deep_merge(slot, value),
                    None => {
                        base_map.insert(key, value);
                    }
                }
            }
        }
        (slot, patch) => *slot = patch,
    }
}

/// Apply one `dotted.key=value` override onto the effective config tree.
/// Every intermediate segment must already exist (the tree starts from the
/// fully materialized defaults), so a typo fails fast naming the key.
fn apply_override(tree: &mut Value, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| {
        CliError::config(format!("override '{spec}' is not of the form key=value"))
    })?;
    if path.is_empty() {
        return Err(CliError::config(format!("override '{spec}' has an empty key")));
    }
    let mut node = tree;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, segment) in segments.iter().enumerate() {
        let map = node.as_object_mut().ok_or_else(|| {
            CliError::config(format!(
                "override key '{path}': '{}' is not a config section",
                segments[..i].join(".")
            ))
        })?;
        node = map.get_mut(*segment).ok_or_else(|| {
            CliError::config(format!("override names unknown config key '{path}'"))
        })?;
    }
    *node = parse_override_value(raw);
    Ok(())
}

/// Build the effective config: materialized defaults, overlaid with the
/// config file (if any), overlaid with dotted-key overrides; then validated.
/// Returns the typed config together with its canonical JSON tree.
pub fn load_config(
    path: Option<&Path>,
    overrides: &[String],
) -> Result<(RunConfig, Value), CliError> {
    let mut tree = serde_json::to_value(RunConfig::default())
        .map_err(|e| CliError::config(format!("cannot serialize defaults: {e}")))?;
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        let file_tree: Value = serde_json::from_str(&text).map_err(|e| {
            CliError::config(format!("config file {} is not valid JSON: {e}", path.display()))
        })?;
        if !file_tree.is_object() {
            return Err(CliError::config(format!(
                "config file {} must contain a JSON object",
                path.display()
            )));
        }
        deep_merge(&mut tree, file_tree);
    }
    for spec in overrides {
        apply_override(&mut tree, spec)?;
    }
    let config: RunConfig = serde_json::from_value(tree.clone())
        .map_err(|e| CliError::config(format!("invalid config: {e}")))?;
    config.validate().map_err(|e| classify(e, Phase::Config))?;
    // Re-serialize the typed config so the effective artifact is canonical
    // (field order, number formatting) rather than whatever the file used.
    let effective = serde_json::to_value(&config)
        .map_err(|e| CliError::config(format!("cannot serialize effective config: {e}")))?;
    Ok((config, effective))
}

// ---------------------------------------------------------------------------
// Run-directory artifacts
// ---------------------------------------------------------------------------

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError {
        code: EXIT_DATA,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError {
        code: EXIT_DATA,
        message: format!("cannot serialize {}: {e}", path.display()),
    })?;
    text.push('\n');
    write_text(path, &text)
}

/// Every run directory records what produced it: the effective config and
/// the tool version. Reports are regenerable from these alone.
pub fn stamp_run_dir(dir: &Path, effective: &Value) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError {
        code: EXIT_DATA,
        message: format!("cannot create {}: {e}", dir.display()),
    })?;
    write_json(&dir.join("effective_config.json"), effective)?;
    write_text(&dir.join("version.txt"), &format!("{TOOL_VERSION}\n"))
}

pub fn parse_split(name: &str) -> Result<SplitTag, CliError> {
    SplitTag::ALL
        .into_iter()
        .find(|t| t.dir_name() == name)
        .ok_or_else(|| {
            CliError::config(format!(
                "unknown split '{name}' (expected one of train, valid_seen, valid_unseen, \
                 test_seen, test_unseen)"
            ))
        })
}

// ---------------------------------------------------------------------------
// Command runners
// ---------------------------------------------------------------------------

pub fn run_gen_data(
    config_path: Option<&Path>,
    overrides: &[String],
    out: &Path,
) -> Result<(), CliError> {
    let (config, effective) = load_config(config_path, overrides)?;
    stamp_run_dir(out, &effective)?;
    let dataset = Dataset::generate(&config).in_phase(Phase::Data)?;
    dataset.export(out).in_phase(Phase::Data)?;
    for tag in SplitTag::ALL {
        println!("wrote {} episodes to {}", dataset.len(tag), out.join(tag.dir_name()).display());
    }
    Ok(())
}

pub fn run_train(
    config_path: Option<&Path>,
    overrides: &[String],
    data: &Path,
    out: &Path,
) -> Result<(), CliError> {
    let (config, effective) = load_config(config_path, overrides)?;
    stamp_run_dir(out, &effective)?;
    let dataset = Dataset::load(data).in_phase(Phase::Data)?;
    let artifacts = vam_harness::train(&config, &dataset, Some(out)).in_phase(Phase::Training)?;
    #[derive(Serialize)]
    struct TrainReport {
        config_hash: String,
        optimizer_steps: usize,
        final_loss: f64,
        final_train_accuracy: f64,
    }
    let report = TrainReport {
        config_hash: config.hash(),
        optimizer_steps: artifacts.losses.len(),
        final_loss: artifacts.losses.last().map(|&(_, l)| l).unwrap_or(f64::NAN),
        final_train_accuracy: artifacts.final_accuracy,
    };
    write_json(&out.join("train_report.json"), &report)?;
    println!(
        "trained {} steps; final loss {:.4}, teacher-forced accuracy {:.3}",
        report.optimizer_steps, report.final_loss, report.final_train_accuracy
    );
    println!("checkpoint written to {}", out.join("model").display());
    Ok(())
}

/// Evaluation artifact: split metrics, per-episode rows, and the
/// per-subgoal table. Deliberately excludes wall-clock so reruns are
/// byte-identical.
#[derive(Serialize)]
pub struct EvalReport {
    pub config_hash: String,
    pub checkpoint: String,
    pub metrics: vam_harness::SplitMetrics,
    pub episodes: Vec<vam_harness::EpisodeEval>,
    pub subgoals: vam_harness::SubgoalReport,
}

pub fn run_eval(
    config_path: Option<&Path>,
    overrides: &[String],
    data: &Path,
    checkpoint: &Path,
    split: &str,
    out: &Path,
) -> Result<(), CliError> {
    let (config, effective) = load_config(config_path, overrides)?;
    let tag = parse_split(split)?;
    stamp_run_dir(out, &effective)?;
    let dataset = Dataset::load(data).in_phase(Phase::Data)?;
    let model = vam_agent::Model::load(checkpoint).map_err(|e| CliError {
        code: EXIT_DATA,
        message: format!("cannot load checkpoint {}: {e}", checkpoint.display()),
    })?;
    let vocab = vam_world::Vocab::builtin();
    let limits = RolloutLimits::from_config(&config);
    let episodes = dataset.split(tag);
    let outcome =
        vam_harness::evaluate(&model, &vocab, tag, episodes, &limits).in_phase(Phase::Evaluation)?;
    let subgoals = vam_harness::subgoal_report(&model, &vocab, tag, episodes, &limits)
        .in_phase(Phase::Evaluation)?;
    let report = EvalReport {
        config_hash: config.hash(),
        checkpoint: checkpoint.display().to_string(),
        metrics: outcome.metrics,
        episodes: outcome.episodes,
        subgoals,
    };
    write_json(&out.join("eval_report.json"), &report)?;
    println!(
        "{}: SR {:.2} GC {:.2} over {} episodes",
        tag.dir_name(),
        report.metrics.success_rate,
        report.metrics.goal_condition_rate,
        report.metrics.episodes
    );
    let mut table = String::new();
    for row in &report.subgoals.rows {
        let _ = writeln!(
            table,
            "  subgoal {:<14} {:>5.1}% over {} attempts",
            format!("{:?}", row.kind),
            row.success_rate,
            row.attempts
        );
    }
    print!("{table}");
    Ok(())
}

pub fn run_ablate(
    config_path: Option<&Path>,
    overrides: &[String],
    data: &Path,
    out: &Path,
) -> Result<(), CliError> {
    let (config, effective) = load_config(config_path, overrides)?;
    stamp_run_dir(out, &effective)?;
    let dataset = Dataset::load(data).in_phase(Phase::Data)?;
    let report = vam_harness::run_ablation(&config, &dataset, Some(out)).in_phase(Phase::Training)?;
    write_json(&out.join("ablation_report.json"), &report)?;
    write_text(&out.join("ablation.csv"), &vam_harness::ablation_csv(&report))?;
    println!("row  flags  SR      GC      (reference SR, full scale)");
    for row in &report.rows {
        println!(
            "{}    {}    {:>5.1}   {:>5.1}   ({:.1})",
            row.row, row.label, row.success_rate, row.goal_condition_rate,
            row.reference_success_rate
        );
    }
    Ok(())
}

pub fn run_gap_study(
    config_path: Option<&Path>,
    overrides: &[String],
    data: &Path,
    seeds: Option<usize>,
    out: &Path,
) -> Result<(), CliError> {
    let (config, effective) = load_config(config_path, overrides)?;
    stamp_run_dir(out, &effective)?;
    let dataset = Dataset::load(data).in_phase(Phase::Data)?;
    let k = seeds.unwrap_or(config.gap_seeds);
    let report = vam_harness::gap_study(&config, &dataset, k, Some(out)).in_phase(Phase::Training)?;
    write_json(&out.join("gap_report.json"), &report)?;
    write_text(&out.join("gap.csv"), &vam_harness::gap_csv(&report))?;
    for row in &report.rows {
        println!(
            "seed {:>2}: valid_unseen SR {:>5.1}  test_unseen SR {:>5.1}",
            row.seed_index, row.valid_unseen_sr, row.test_unseen_sr
        );
    }
    println!(
        "selected seed {} (by validation); regret {:.2}, spearman {:.3}, \
         std valid {:.2} / test {:.2}",
        report.selected_seed_index,
        report.selection_regret,
        report.spearman_val_test,
        report.valid_unseen_sr_std,
        report.test_unseen_sr_std
    );
    Ok(())
}

pub fn run_gradcheck(seed: u64, instances: usize) -> Result<(), CliError> {
    const TOL: f64 = 1e-3;
    let suite = vam_tensor::gradcheck::run_suite(seed, instances).map_err(|e| CliError {
        code: EXIT_TRAINING,
        message: format!("gradcheck suite failed to run: {e}"),
    })?;
    for line in suite.lines(TOL) {
        println!("{line}");
    }
    let loss = vam_agent::run_loss_gradcheck(seed, instances).map_err(|e| CliError {
        code: EXIT_TRAINING,
        message: format!("loss gradcheck failed to run: {e}"),
    })?;
    let loss_ok = loss.max_rel_err.is_finite() && loss.max_rel_err < TOL;
    println!(
        "gradcheck {:<16} max_rel_err {:>10.3e} over {} instances ... {}",
        "compute_loss",
        loss.max_rel_err,
        loss.instances,
        if loss_ok { "ok" } else { "FAILED" }
    );
    if suite.all_passed(TOL) && loss_ok {
        Ok(())
    } else {
        Err(CliError {
            code: 1,
            message: format!("gradient checks exceeded relative-error tolerance {TOL}"),
        })
    }
}
