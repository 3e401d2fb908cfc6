use vam_tensor::{Tape, Tensor, TensorId};
use vam_world::{ActionKind, ActionType, ACTION_KINDS};

use crate::error::AgentError;
use crate::model::Model;
use crate::Result;

/// View index (in `VIEW_NAMES` order) whose feature an action scores
/// against: turns and pitch moves look at the view they would reveal;
/// moving forward, every manipulation, and Stop anchor on the front view.
pub fn view_for_action(kind: ActionKind) -> usize {
    match kind {
        ActionKind::TurnLeft => 1,
        ActionKind::TurnRight => 2,
        ActionKind::LookUp => 3,
        ActionKind::LookDown => 4,
        _ => 0,
    }
}

/// Action-type index used by the gate: navigation 0, manipulation 1.
pub fn type_index(kind: ActionKind) -> usize {
    match kind.action_type() {
        ActionType::Navigation => 0,
        ActionType::Manipulation => 1,
    }
}

/// Language features encoded once per instruction, with the cross-modal
/// keys/values precomputed so each view/step reuses them on the same tape.
pub struct LanguageContext {
    /// The (possibly truncated) token ids that were encoded.
    pub tokens: Vec<usize>,
    /// Contextual token features, shape (n_tok, d).
    pub feats: TensorId,
    /// Per-cross-layer (keys, values) over the language features.
    layer_kv: Vec<(TensorId, TensorId)>,
}

fn layer_norm_block(
    model: &Model,
    tape: &mut Tape,
    x: TensorId,
    prefix: &str,
) -> Result<TensorId> {
    let gain = tape.param(&model.params, model.pid(&format!("{prefix}.gain")));
    let bias = tape.param(&model.params, model.pid(&format!("{prefix}.bias")));
    Ok(tape.layer_norm(x, gain, bias)?)
}

fn ffn_block(model: &Model, tape: &mut Tape, x: TensorId, prefix: &str) -> Result<TensorId> {
    let w1 = tape.param(&model.params, model.pid(&format!("{prefix}.w1")));
    let b1 = tape.param(&model.params, model.pid(&format!("{prefix}.b1")));
    let w2 = tape.param(&model.params, model.pid(&format!("{prefix}.w2")));
    let b2 = tape.param(&model.params, model.pid(&format!("{prefix}.b2")));
    let hidden = tape.linear(x, w1, b1)?;
    let hidden = tape.tanh(hidden);
    Ok(tape.linear(hidden, w2, b2)?)
}

/// Project `x` with the layer's q/k/v maps, attend, O-project, then apply
/// the two residual+norm sublayers. `kv` supplies precomputed keys/values
/// for cross-attention; None means self-attention over `x`.
fn attention_block(
    model: &Model,
    tape: &mut Tape,
    x: TensorId,
    kv: Option<(TensorId, TensorId)>,
    prefix: &str,
) -> Result<TensorId> {
    let wq = tape.param(&model.params, model.pid(&format!("{prefix}.attn.wq")));
    let bq = tape.param(&model.params, model.pid(&format!("{prefix}.attn.bq")));
    let q = tape.linear(x, wq, bq)?;
    let (k, v) = match kv {
        Some(pair) => pair,
        None => project_kv(model, tape, x, prefix)?,
    };
    let attended = tape.attention(q, k, v)?;
    let wo = tape.param(&model.params, model.pid(&format!("{prefix}.attn.wo")));
    let bo = tape.param(&model.params, model.pid(&format!("{prefix}.attn.bo")));
    let o = tape.linear(attended, wo, bo)?;
    let res = tape.add(x, o)?;
    let x = layer_norm_block(model, tape, res, &format!("{prefix}.ln1"))?;
    let f = ffn_block(model, tape, x, &format!("{prefix}.ffn"))?;
    let res = tape.add(x, f)?;
    layer_norm_block(model, tape, res, &format!("{prefix}.ln2"))
}

fn project_kv(
    model: &Model,
    tape: &mut Tape,
    source: TensorId,
    prefix: &str,
) -> Result<(TensorId, TensorId)> {
    let wk = tape.param(&model.params, model.pid(&format!("{prefix}.attn.wk")));
    let bk = tape.param(&model.params, model.pid(&format!("{prefix}.attn.bk")));
    let wv = tape.param(&model.params, model.pid(&format!("{prefix}.attn.wv")));
    let bv = tape.param(&model.params, model.pid(&format!("{prefix}.attn.bv")));
    let k = tape.linear(source, wk, bk)?;
    let v = tape.linear(source, wv, bv)?;
    Ok((k, v))
}

/// Word + position embeddings through the language self-attention stack.
/// Sequences longer than `max_tokens` keep their leading tokens.
pub fn encode_language(model: &Model, tape: &mut Tape, tokens: &[usize]) -> Result<TensorId> {
    if tokens.is_empty() {
        return Err(AgentError::Dimension("empty token sequence".into()));
    }
    for &t in tokens {
        if t >= model.config.vocab_size {
            return Err(AgentError::Vocabulary(format!(
                "token id {t} outside the closed vocabulary of size {}",
                model.config.vocab_size
            )));
        }
    }
    let len = tokens.len().min(model.config.max_tokens);
    let word_table = tape.param(&model.params, model.pid("embed.word"));
    let pos_table = tape.param(&model.params, model.pid("embed.pos"));
    let words = tape.gather_rows(word_table, &tokens[..len])?;
    let positions: Vec<usize> = (0..len).collect();
    let pos = tape.gather_rows(pos_table, &positions)?;
    let mut x = tape.add(words, pos)?;
    for l in 0..model.config.language_layers {
        x = attention_block(model, tape, x, None, &format!("lang.{l}"))?;
    }
    Ok(x)
}

/// Encode the instruction and precompute cross-modal keys/values.
pub fn encode_language_context(
    model: &Model,
    tape: &mut Tape,
    tokens: &[usize],
) -> Result<LanguageContext> {
    let feats = encode_language(model, tape, tokens)?;
    let mut layer_kv = Vec::with_capacity(model.config.cross_layers);
    for l in 0..model.config.cross_layers {
        layer_kv.push(project_kv(model, tape, feats, &format!("cross.{l}"))?);
    }
    let len = tokens.len().min(model.config.max_tokens);
    Ok(LanguageContext {
        tokens: tokens[..len].to_vec(),
        feats,
        layer_kv,
    })
}

/// Linear map of the one-hot action-history window (most recent last,
/// left-padded with the null action) to a d-wide embedding.
pub fn encode_history(model: &Model, tape: &mut Tape, history: &[usize]) -> Result<TensorId> {
    let window = model.config.history_window;
    let slots = model.config.action_count + 1; // +1 for the null action
    let null = model.config.action_count;
    for &kind in history {
        if kind >= model.config.action_count {
            return Err(AgentError::Label(format!(
                "history entry {kind} is not an action kind index"
            )));
        }
    }
    let recent = if history.len() > window {
        &history[history.len() - window..]
    } else {
        history
    };
    let mut onehot = vec![0.0; window * slots];
    for slot in 0..window {
        let pad = window - recent.len();
        let value = if slot < pad { null } else { recent[slot - pad] };
        onehot[slot * slots + value] = 1.0;
    }
    let x = tape.leaf(Tensor::row(&onehot));
    let w = tape.param(&model.params, model.pid("hist.w"));
    let b = tape.param(&model.params, model.pid("hist.b"));
    Ok(tape.linear(x, w, b)?)
}

/// Fuse one raw view feature vector with the action-history embedding via a
/// linear layer, then attend over the language features through the
/// cross-modal stack. The result is the view's pooled feature V_i (the mean
/// over the view's single token position).
pub fn fuse_view(
    model: &Model,
    tape: &mut Tape,
    ctx: &LanguageContext,
    history: TensorId,
    features: &[f64],
) -> Result<TensorId> {
    if features.len() != model.config.feature_width {
        return Err(AgentError::Dimension(format!(
            "view feature width {} != configured {}",
            features.len(),
            model.config.feature_width
        )));
    }
    let feat = tape.leaf(Tensor::row(features));
    let joined = tape.concat(&[feat, history], 1)?;
    let w = tape.param(&model.params, model.pid("fuse.w"));
    let b = tape.param(&model.params, model.pid("fuse.b"));
    let mut z = tape.linear(joined, w, b)?;
    for l in 0..model.config.cross_layers {
        z = attention_block(model, tape, z, Some(ctx.layer_kv[l]), &format!("cross.{l}"))?;
    }
    Ok(z)
}

/// Matching score M_i for one (view feature, action embedding) pair: a
/// two-layer feedforward network over their concatenation.
pub fn match_score(
    model: &Model,
    tape: &mut Tape,
    view: TensorId,
    action: TensorId,
) -> Result<TensorId> {
    let pair = tape.concat(&[view, action], 1)?;
    let scores = match_scores_matrix(model, tape, pair)?;
    tape.element(scores, 0).map_err(AgentError::from)
}

/// The matching FFN applied to rows of `pairs` (each row [V_i; A_i]),
/// producing one score per row.
fn match_scores_matrix(model: &Model, tape: &mut Tape, pairs: TensorId) -> Result<TensorId> {
    let w1 = tape.param(&model.params, model.pid("match.w1"));
    let b1 = tape.param(&model.params, model.pid("match.b1"));
    let w2 = tape.param(&model.params, model.pid("match.w2"));
    let b2 = tape.param(&model.params, model.pid("match.b2"));
    let hidden = tape.linear(pairs, w1, b1)?;
    let hidden = tape.tanh(hidden);
    Ok(tape.linear(hidden, w2, b2)?)
}

/// One decision step's heads, all on the shared tape.
pub struct StepScores {
    /// Decision logits over actions, shape (1, action count). Gated when
    /// the gate is enabled, raw match scores or classifier logits otherwise.
    pub scores: TensorId,
    /// Raw match scores before gating (matching rows only).
    pub match_raw: Option<TensorId>,
    /// Navigation/manipulation gate logits, shape (1, 2) (gated row only).
    pub gate_logits: Option<TensorId>,
    /// Strictly positive per-action gate weights (gated row only).
    pub gate_row: Option<TensorId>,
    /// Object-category logits from the front view, shape (1, categories).
    pub object_logits: TensorId,
    /// The computed view features, front first (length 1 or 5).
    pub views: Vec<TensorId>,
}

/// Run one decision step. `features` holds the five raw view feature
/// vectors in `VIEW_NAMES` order; narrow-view configurations read only the
/// front one.
pub fn forward_step(
    model: &Model,
    tape: &mut Tape,
    ctx: &LanguageContext,
    history: &[usize],
    features: &[Vec<f64>],
) -> Result<StepScores> {
    let cfg = &model.config;
    if features.len() != cfg.view_count {
        return Err(AgentError::Dimension(format!(
            "expected {} view feature vectors, got {}",
            cfg.view_count,
            features.len()
        )));
    }
    let hist = encode_history(model, tape, history)?;
    let used = if cfg.flags.wide_view {
        cfg.view_count
    } else {
        1
    };
    let mut views = Vec::with_capacity(used);
    for feats in features.iter().take(used) {
        views.push(fuse_view(model, tape, ctx, hist, feats)?);
    }
    let obj_w = tape.param(&model.params, model.pid("object.w"));
    let obj_b = tape.param(&model.params, model.pid("object.b"));
    let object_logits = tape.linear(views[0], obj_w, obj_b)?;

    if !cfg.flags.view_act_matching {
        let mut parts = views.clone();
        parts.push(hist);
        let feat = tape.concat(&parts, 1)?;
        let w = tape.param(&model.params, model.pid("cls.w"));
        let b = tape.param(&model.params, model.pid("cls.b"));
        let scores = tape.linear(feat, w, b)?;
        return Ok(StepScores {
            scores,
            match_raw: None,
            gate_logits: None,
            gate_row: None,
            object_logits,
            views,
        });
    }

    // One row per action: [V_view(a); A_a] through the matching FFN.
    let assigned: Vec<TensorId> = ACTION_KINDS
        .iter()
        .map(|&kind| views[view_for_action(kind)])
        .collect();
    let view_rows = tape.concat(&assigned, 0)?;
    let act_table = tape.param(&model.params, model.pid("act.embed"));
    let act_ids: Vec<usize> = (0..cfg.action_count).collect();
    let act_rows = tape.gather_rows(act_table, &act_ids)?;
    let pairs = tape.concat(&[view_rows, act_rows], 1)?;
    let score_col = match_scores_matrix(model, tape, pairs)?;
    let match_raw = tape.transpose(score_col)?;

    if !cfg.flags.act_type_gate {
        return Ok(StepScores {
            scores: match_raw,
            match_raw: Some(match_raw),
            gate_logits: None,
            gate_row: None,
            object_logits,
            views,
        });
    }

    let all_views = tape.concat(&views, 1)?;
    let gw = tape.param(&model.params, model.pid("gate.w"));
    let gb = tape.param(&model.params, model.pid("gate.b"));
    let gate_logits = tape.linear(all_views, gw, gb)?;
    let gate_pos = tape.exp(gate_logits);
    let type_cols: Vec<usize> = ACTION_KINDS.iter().map(|&k| type_index(k)).collect();
    let gate_row = tape.gather_cols(gate_pos, &type_cols)?;
    let gated = tape.mul(match_raw, gate_row)?;
    Ok(StepScores {
        scores: gated,
        match_raw: Some(match_raw),
        gate_logits: Some(gate_logits),
        gate_row: Some(gate_row),
        object_logits,
        views,
    })
}
