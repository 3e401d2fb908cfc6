use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vam_tensor::{load_params, save_params, ParamId, ParamStore, Tensor};
use vam_world::CATEGORY_COUNT;

use crate::config::ModelConfig;
use crate::error::AgentError;
use crate::Result;

/// Width multiplier of the feedforward sublayers.
const FFN_MULT: usize = 2;
/// Initial standard deviation of embedding tables.
const EMBED_STD: f64 = 0.1;

/// How a parameter tensor is initialized.
enum Init {
    /// Gaussian with std 1/sqrt(fan_in); fan_in is the first shape entry.
    FanIn,
    /// Gaussian with `EMBED_STD`.
    Embedding,
    Zeros,
    Ones,
}

/// The agent: a configuration plus its named parameter store. Parameters
/// exist only for the components the ablation flags enable.
#[derive(Debug)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ParamStore,
}

/// Parameter names and shapes implied by a configuration, in the fixed
/// construction (and therefore checkpoint) order.
pub fn expected_params(config: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    param_plan(config)
        .into_iter()
        .map(|(name, shape, _)| (name, shape))
        .collect()
}

fn param_plan(config: &ModelConfig) -> Vec<(String, Vec<usize>, Init)> {
    let d = config.hidden;
    let mut out: Vec<(String, Vec<usize>, Init)> = Vec::new();
    let mut push = |name: String, shape: Vec<usize>, init: Init| {
        out.push((name, shape, init));
    };
    push("embed.word".into(), vec![config.vocab_size, d], Init::Embedding);
    push("embed.pos".into(), vec![config.max_tokens, d], Init::Embedding);
    let transformer_block = |prefix: String, push: &mut dyn FnMut(String, Vec<usize>, Init)| {
        for mat in ["wq", "wk", "wv", "wo"] {
            push(format!("{prefix}.attn.{mat}"), vec![d, d], Init::FanIn);
            let b = mat.replace('w', "b");
            push(format!("{prefix}.attn.{b}"), vec![d], Init::Zeros);
        }
        push(format!("{prefix}.ln1.gain"), vec![d], Init::Ones);
        push(format!("{prefix}.ln1.bias"), vec![d], Init::Zeros);
        push(format!("{prefix}.ffn.w1"), vec![d, FFN_MULT * d], Init::FanIn);
        push(format!("{prefix}.ffn.b1"), vec![FFN_MULT * d], Init::Zeros);
        push(format!("{prefix}.ffn.w2"), vec![FFN_MULT * d, d], Init::FanIn);
        push(format!("{prefix}.ffn.b2"), vec![d], Init::Zeros);
        push(format!("{prefix}.ln2.gain"), vec![d], Init::Ones);
        push(format!("{prefix}.ln2.bias"), vec![d], Init::Zeros);
    };
    for l in 0..config.language_layers {
        transformer_block(format!("lang.{l}"), &mut push);
    }
    let hist_width = config.history_window * (config.action_count + 1);
    push("hist.w".into(), vec![hist_width, d], Init::FanIn);
    push("hist.b".into(), vec![d], Init::Zeros);
    push("fuse.w".into(), vec![config.feature_width + d, d], Init::FanIn);
    push("fuse.b".into(), vec![d], Init::Zeros);
    for l in 0..config.cross_layers {
        transformer_block(format!("cross.{l}"), &mut push);
    }
    push("object.w".into(), vec![d, CATEGORY_COUNT], Init::FanIn);
    push("object.b".into(), vec![CATEGORY_COUNT], Init::Zeros);
    if config.flags.view_act_matching {
        push("act.embed".into(), vec![config.action_count, d], Init::Embedding);
        push("match.w1".into(), vec![2 * d, d], Init::FanIn);
        push("match.b1".into(), vec![d], Init::Zeros);
        push("match.w2".into(), vec![d, 1], Init::FanIn);
        push("match.b2".into(), vec![1], Init::Zeros);
    } else {
        let views_used = if config.flags.wide_view {
            config.view_count
        } else {
            1
        };
        let cls_in = views_used * d + d;
        push("cls.w".into(), vec![cls_in, config.action_count], Init::FanIn);
        push("cls.b".into(), vec![config.action_count], Init::Zeros);
    }
    if config.flags.act_type_gate {
        push("gate.w".into(), vec![config.view_count * d, 2], Init::FanIn);
        push("gate.b".into(), vec![2], Init::Zeros);
    }
    out
}

impl Model {
    /// Build a model with fresh parameters drawn from `seed`.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        for (name, shape, init) in param_plan(&config) {
            let tensor = match init {
                Init::FanIn => {
                    let std = 1.0 / (shape[0] as f64).sqrt();
                    Tensor::randn(&shape, std, &mut rng)
                }
                Init::Embedding => Tensor::randn(&shape, EMBED_STD, &mut rng),
                Init::Zeros => Tensor::zeros(&shape),
                Init::Ones => Tensor::full(&shape, 1.0),
            };
            params.add(&name, tensor);
        }
        Ok(Self { config, params })
    }

    /// Wrap an existing parameter store, verifying it matches the config.
    pub fn from_parts(config: ModelConfig, params: ParamStore) -> Result<Self> {
        config.validate()?;
        let expected = expected_params(&config);
        if params.len() != expected.len() {
            return Err(AgentError::Checkpoint(format!(
                "expected {} parameters, checkpoint has {}",
                expected.len(),
                params.len()
            )));
        }
        for (id, (name, shape)) in params.ids().zip(expected.iter()) {
            if params.name(id) != name {
                return Err(AgentError::Checkpoint(format!(
                    "checkpoint parameter named {:?}, expected {:?}",
                    params.name(id),
                    name
                )));
            }
            if &params.value(id).shape != shape {
                return Err(AgentError::Checkpoint(format!(
                    "parameter {name} has shape {:?}, expected {shape:?}",
                    params.value(id).shape
                )));
            }
        }
        Ok(Self { config, params })
    }

    /// Parameter id by name; the name set is fixed by the config.
    pub(crate) fn pid(&self, name: &str) -> ParamId {
        self.params
            .lookup(name)
            .unwrap_or_else(|| panic!("model parameter {name:?} missing"))
    }

    /// Total scalar parameter count.
    pub fn scalar_count(&self) -> usize {
        self.params.scalar_count()
    }

    /// Write `<stem>.json`/`<stem>.bin` (parameters) and `<stem>.model.json`
    /// (configuration) so the model can be reloaded standalone.
    pub fn save(&self, stem: &Path) -> Result<()> {
        save_params(&self.params, stem)?;
        let cfg_path = stem.with_extension("model.json");
        let mut text = serde_json::to_string_pretty(&self.config)?;
        text.push('\n');
        std::fs::write(cfg_path, text)?;
        Ok(())
    }

    /// Reload a model saved with [`Model::save`].
    pub fn load(stem: &Path) -> Result<Self> {
        let cfg_path = stem.with_extension("model.json");
        let text = std::fs::read_to_string(&cfg_path)?;
        let config: ModelConfig = serde_json::from_str(&text)?;
        let params = load_params(stem)?;
        Self::from_parts(config, params)
    }
}
