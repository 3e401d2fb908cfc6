use crate::params::{ParamId, ParamStore};
use crate::{Result, Tensor, TensorError};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TensorId(pub(crate) usize);

const LN_EPS: f64 = 1e-5;

/// The primitive that produced a node, with whatever the backward pass needs.
#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul {
        a: TensorId,
        b: TensorId,
    },
    Transpose {
        x: TensorId,
    },
    Add {
        a: TensorId,
        b: TensorId,
    },
    /// Row-broadcast bias add: `m[r,c] + bias[c]` per row.
    AddRow {
        m: TensorId,
        bias: TensorId,
    },
    Mul {
        a: TensorId,
        b: TensorId,
    },
    Scale {
        x: TensorId,
        c: f64,
    },
    Tanh {
        x: TensorId,
    },
    Exp {
        x: TensorId,
    },
    Sum {
        x: TensorId,
    },
    Mean {
        x: TensorId,
    },
    Element {
        x: TensorId,
        index: usize,
    },
    Reshape {
        x: TensorId,
    },
    Concat {
        parts: Vec<TensorId>,
        axis: usize,
    },
    GatherRows {
        table: TensorId,
        ids: Vec<usize>,
    },
    GatherCols {
        x: TensorId,
        ids: Vec<usize>,
    },
    Softmax {
        x: TensorId,
        axis: usize,
    },
    LayerNorm {
        x: TensorId,
        gain: TensorId,
        bias: TensorId,
        normalized: Vec<f64>,
        inv_std: Vec<f64>,
    },
    CrossEntropy {
        logits: TensorId,
        targets: Vec<usize>,
        probs: Vec<f64>,
    },
}

struct Node {
    value: Tensor,
    op: Op,
}

/// Wengert list rebuilt on every forward pass. Operations append nodes, so
/// an operation's inputs always precede it and the reverse sweep is a valid
/// topological order visiting each node exactly once.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: TensorId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Gradient of a tape node, populated by `backward` when reachable.
    pub fn grad(&self, id: TensorId) -> Option<&[f64]> {
        self.nodes[id.0].value.grad.as_deref()
    }

    fn push(&mut self, value: Tensor, op: Op) -> TensorId {
        self.nodes.push(Node { value, op });
        TensorId(self.nodes.len() - 1)
    }

    fn requires(&self, id: TensorId) -> bool {
        self.nodes[id.0].value.requires_grad
    }

    /// Record a constant input.
    pub fn leaf(&mut self, value: Tensor) -> TensorId {
        self.push(value, Op::Leaf)
    }

    /// Place a parameter from the store onto this tape. Backward accumulates
    /// the node's gradient into the store entry.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> TensorId {
        let mut value = store.value(id).clone();
        value.grad = None;
        self.push(value, Op::Param(id))
    }

    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if ta.rank() != 2 || tb.rank() != 2 || ta.shape[1] != tb.shape[0] {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                lhs: ta.shape.clone(),
                rhs: tb.shape.clone(),
            });
        }
        let (m, k, n) = (ta.shape[0], ta.shape[1], tb.shape[1]);
        let out = matmul_raw(&ta.data, &tb.data, m, k, n);
        let mut value = Tensor::new(vec![m, n], out)?;
        value.requires_grad = self.requires(a) || self.requires(b);
        Ok(self.push(value, Op::MatMul { a, b }))
    }

    pub fn transpose(&mut self, x: TensorId) -> Result<TensorId> {
        let tx = &self.nodes[x.0].value;
        if tx.rank() != 2 {
            return Err(TensorError::InvalidShape {
                op: "transpose",
                shape: tx.shape.clone(),
                reason: "expects rank 2".into(),
            });
        }
        let (r, c) = (tx.shape[0], tx.shape[1]);
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = tx.data[i * c + j];
            }
        }
        let mut value = Tensor::new(vec![c, r], out)?;
        value.requires_grad = self.requires(x);
        Ok(self.push(value, Op::Transpose { x }))
    }

    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if ta.shape != tb.shape {
            return Err(TensorError::ShapeMismatch {
                op: "add",
                lhs: ta.shape.clone(),
                rhs: tb.shape.clone(),
            });
        }
        let data = ta.data.iter().zip(&tb.data).map(|(x, y)| x + y).collect();
        let mut value = Tensor::new(ta.shape.clone(), data)?;
        value.requires_grad = self.requires(a) || self.requires(b);
        Ok(self.push(value, Op::Add { a, b }))
    }

    pub fn add_row(&mut self, m: TensorId, bias: TensorId) -> Result<TensorId> {
        let (tm, tb) = (&self.nodes[m.0].value, &self.nodes[bias.0].value);
        if tm.rank() != 2 || tb.rank() != 1 || tm.shape[1] != tb.shape[0] {
            return Err(TensorError::ShapeMismatch {
                op: "add_row",
                lhs: tm.shape.clone(),
                rhs: tb.shape.clone(),
            });
        }
        let cols = tm.shape[1];
        let data = tm
            .data
            .iter()
            .enumerate()
            .map(|(i, x)| x + tb.data[i % cols])
            .collect();
        let mut value = Tensor::new(tm.shape.clone(), data)?;
        value.requires_grad = self.requires(m) || self.requires(bias);
        Ok(self.push(value, Op::AddRow { m, bias }))
    }

    pub fn mul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if ta.shape != tb.shape {
            return Err(TensorError::ShapeMismatch {
                op: "mul",
                lhs: ta.shape.clone(),
                rhs: tb.shape.clone(),
            });
        }
        let data = ta.data.iter().zip(&tb.data).map(|(x, y)| x * y).collect();
        let mut value = Tensor::new(ta.shape.clone(), data)?;
        value.requires_grad = self.requires(a) || self.requires(b);
        Ok(self.push(value, Op::Mul { a, b }))
    }

    pub fn scale(&mut self, x: TensorId, c: f64) -> TensorId {
        let tx = &self.nodes[x.0].value;
        let data = tx.data.iter().map(|v| v * c).collect();
        let mut value = Tensor {
            shape: tx.shape.clone(),
            data,
            requires_grad: self.requires(x),
            grad: None,
        };
        value.requires_grad = self.requires(x);
        self.push(value, Op::Scale { x, c })
    }

    pub fn tanh(&mut self, x: TensorId) -> TensorId {
        let tx = &self.nodes[x.0].value;
        let data = tx.data.iter().map(|v| v.tanh()).collect();
        let value = Tensor {
            shape: tx.shape.clone(),
            data,
            requires_grad: self.requires(x),
            grad: None,
        };
        self.push(value, Op::Tanh { x })
    }

    pub fn exp(&mut self, x: TensorId) -> TensorId {
        let tx = &self.nodes[x.0].value;
        let data = tx.data.iter().map(|v| v.exp()).collect();
        let value = Tensor {
            shape: tx.shape.clone(),
            data,
            requires_grad: self.requires(x),
            grad: None,
        };
        self.push(value, Op::Exp { x })
    }

    pub fn sum(&mut self, x: TensorId) -> TensorId {
        let tx = &self.nodes[x.0].value;
        let value = Tensor {
            shape: vec![1],
            data: vec![tx.data.iter().sum()],
            requires_grad: self.requires(x),
            grad: None,
        };
        self.push(value, Op::Sum { x })
    }

    pub fn mean(&mut self, x: TensorId) -> TensorId {
        let tx = &self.nodes[x.0].value;
        let n = tx.numel() as f64;
        let value = Tensor {
            shape: vec![1],
            data: vec![tx.data.iter().sum::<f64>() / n],
            requires_grad: self.requires(x),
            grad: None,
        };
        self.push(value, Op::Mean { x })
    }

    /// Pick one element by flat index, as a scalar node.
    pub fn element(&mut self, x: TensorId, index: usize) -> Result<TensorId> {
        let tx = &self.nodes[x.0].value;
        if index >= tx.numel() {
            return Err(TensorError::IndexOutOfRange {
                op: "element",
                index,
                size: tx.numel(),
            });
        }
        let value = Tensor {
            shape: vec![1],
            data: vec![tx.data[index]],
            requires_grad: self.requires(x),
            grad: None,
        };
        Ok(self.push(value, Op::Element { x, index }))
    }

    pub fn reshape(&mut self, x: TensorId, shape: &[usize]) -> Result<TensorId> {
        let tx = &self.nodes[x.0].value;
        if shape.iter().product::<usize>() != tx.numel() {
            return Err(TensorError::InvalidShape {
                op: "reshape",
                shape: shape.to_vec(),
                reason: format!("does not match {} elements", tx.numel()),
            });
        }
        let value = Tensor {
            shape: shape.to_vec(),
            data: tx.data.clone(),
            requires_grad: self.requires(x),
            grad: None,
        };
        Ok(self.push(value, Op::Reshape { x }))
    }

    /// Concatenate along `axis`. Rank-1 tensors concat on axis 0; rank-2 on
    /// axis 0 (stack rows) or axis 1 (widen rows).
    pub fn concat(&mut self, parts: &[TensorId], axis: usize) -> Result<TensorId> {
        assert!(!parts.is_empty(), "concat of zero tensors");
        let first = &self.nodes[parts[0].0].value;
        let rank = first.rank();
        if axis >= rank {
            return Err(TensorError::InvalidShape {
                op: "concat",
                shape: first.shape.clone(),
                reason: format!("axis {axis} out of range"),
            });
        }
        for p in parts {
            let tp = &self.nodes[p.0].value;
            let mut same = tp.rank() == rank;
            for d in 0..rank {
                same &= d == axis || tp.shape[d] == first.shape[d];
            }
            if !same {
                return Err(TensorError::ShapeMismatch {
                    op: "concat",
                    lhs: first.shape.clone(),
                    rhs: tp.shape.clone(),
                });
            }
        }
        let mut shape = first.shape.clone();
        shape[axis] = parts
            .iter()
            .map(|p| self.nodes[p.0].value.shape[axis])
            .sum();
        let mut data = Vec::with_capacity(shape.iter().product());
        if rank == 1 || axis == 0 {
            for p in parts {
                data.extend_from_slice(&self.nodes[p.0].value.data);
            }
        } else {
            let rows = shape[0];
            for r in 0..rows {
                for p in parts {
                    let tp = &self.nodes[p.0].value;
                    let c = tp.shape[1];
                    data.extend_from_slice(&tp.data[r * c..(r + 1) * c]);
                }
            }
        }
        let requires = parts.iter().any(|p| self.requires(*p));
        let mut value = Tensor::new(shape, data)?;
        value.requires_grad = requires;
        Ok(self.push(
            value,
            Op::Concat {
                parts: parts.to_vec(),
                axis,
            },
        ))
    }

    /// Embedding lookup: gather rows of `table` by index, with repeats.
    pub fn gather_rows(&mut self, table: TensorId, ids: &[usize]) -> Result<TensorId> {
        let tt = &self.nodes[table.0].value;
        if tt.rank() != 2 {
            return Err(TensorError::InvalidShape {
                op: "gather_rows",
                shape: tt.shape.clone(),
                reason: "expects rank 2".into(),
            });
        }
        let (rows, cols) = (tt.shape[0], tt.shape[1]);
        let mut data = Vec::with_capacity(ids.len() * cols);
        for &id in ids {
            if id >= rows {
                return Err(TensorError::IndexOutOfRange {
                    op: "gather_rows",
                    index: id,
                    size: rows,
                });
            }
            data.extend_from_slice(&tt.data[id * cols..(id + 1) * cols]);
        }
        let mut value = Tensor::new(vec![ids.len(), cols], data)?;
        value.requires_grad = self.requires(table);
        Ok(self.push(
            value,
            Op::GatherRows {
                table,
                ids: ids.to_vec(),
            },
        ))
    }

    /// Gather columns by index, with repeats: out[i,j] = x[i, ids[j]].
    pub fn gather_cols(&mut self, x: TensorId, ids: &[usize]) -> Result<TensorId> {
        let tx = &self.nodes[x.0].value;
        if tx.rank() != 2 {
            return Err(TensorError::InvalidShape {
                op: "gather_cols",
                shape: tx.shape.clone(),
                reason: "expects rank 2".into(),
            });
        }
        let (rows, cols) = (tx.shape[0], tx.shape[1]);
        let mut data = Vec::with_capacity(rows * ids.len());
        for r in 0..rows {
            for &id in ids {
                if id >= cols {
                    return Err(TensorError::IndexOutOfRange {
                        op: "gather_cols",
                        index: id,
                        size: cols,
                    });
                }
                data.push(tx.data[r * cols + id]);
            }
        }
        let mut value = Tensor::new(vec![rows, ids.len()], data)?;
        value.requires_grad = self.requires(x);
        Ok(self.push(
            value,
            Op::GatherCols {
                x,
                ids: ids.to_vec(),
            },
        ))
    }

    /// Numerically stable softmax along `axis` of a rank-1 or rank-2 tensor.
    pub fn softmax(&mut self, x: TensorId, axis: usize) -> Result<TensorId> {
        let tx = &self.nodes[x.0].value;
        if tx.data.iter().any(|v| !v.is_finite()) {
            return Err(TensorError::NonFinite { op: "softmax" });
        }
        let (lanes, lane_len, stride) = lane_layout(&tx.shape, axis).ok_or_else(|| {
            TensorError::InvalidShape {
                op: "softmax",
                shape: tx.shape.clone(),
                reason: format!("axis {axis} invalid for this rank"),
            }
        })?;
        let mut data = vec![0.0; tx.numel()];
        for lane in 0..lanes {
            let base = lane_base(lane, lane_len, stride);
            let mut max = f64::NEG_INFINITY;
            for i in 0..lane_len {
                max = max.max(tx.data[base + i * stride]);
            }
            let mut total = 0.0;
            for i in 0..lane_len {
                let e = (tx.data[base + i * stride] - max).exp();
                data[base + i * stride] = e;
                total += e;
            }
            for i in 0..lane_len {
                data[base + i * stride] /= total;
            }
        }
        let mut value = Tensor::new(tx.shape.clone(), data)?;
        value.requires_grad = self.requires(x);
        Ok(self.push(value, Op::Softmax { x, axis }))
    }

    /// Per-row layer normalization with affine gain and bias.
    pub fn layer_norm(&mut self, x: TensorId, gain: TensorId, bias: TensorId) -> Result<TensorId> {
        let (tx, tg, tb) = (
            &self.nodes[x.0].value,
            &self.nodes[gain.0].value,
            &self.nodes[bias.0].value,
        );
        let d = *tx.shape.last().expect("non-empty shape");
        if tx.rank() > 2 || tg.shape != vec![d] || tb.shape != vec![d] {
            return Err(TensorError::ShapeMismatch {
                op: "layer_norm",
                lhs: tx.shape.clone(),
                rhs: tg.shape.clone(),
            });
        }
        let rows = tx.numel() / d;
        let mut normalized = vec![0.0; tx.numel()];
        let mut inv_std = vec![0.0; rows];
        let mut data = vec![0.0; tx.numel()];
        for r in 0..rows {
            let row = &tx.data[r * d..(r + 1) * d];
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let istd = 1.0 / (var + LN_EPS).sqrt();
            inv_std[r] = istd;
            for i in 0..d {
                let xh = (row[i] - mean) * istd;
                normalized[r * d + i] = xh;
                data[r * d + i] = xh * tg.data[i] + tb.data[i];
            }
        }
        let mut value = Tensor::new(tx.shape.clone(), data)?;
        value.requires_grad = self.requires(x) || self.requires(gain) || self.requires(bias);
        Ok(self.push(
            value,
            Op::LayerNorm {
                x,
                gain,
                bias,
                normalized,
                inv_std,
            },
        ))
    }

    /// Mean negative log softmax-probability of the target class per row.
    pub fn cross_entropy(&mut self, logits: TensorId, targets: &[usize]) -> Result<TensorId> {
        let tl = &self.nodes[logits.0].value;
        if tl.rank() != 2 || tl.shape[0] != targets.len() {
            return Err(TensorError::InvalidShape {
                op: "cross_entropy",
                shape: tl.shape.clone(),
                reason: format!("expects [batch={} x classes]", targets.len()),
            });
        }
        let (b, c) = (tl.shape[0], tl.shape[1]);
        let mut probs = vec![0.0; b * c];
        let mut loss = 0.0;
        for (r, &t) in targets.iter().enumerate() {
            if t >= c {
                return Err(TensorError::IndexOutOfRange {
                    op: "cross_entropy",
                    index: t,
                    size: c,
                });
            }
            let row = &tl.data[r * c..(r + 1) * c];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = row.iter().map(|v| (v - max).exp()).sum();
            for i in 0..c {
                probs[r * c + i] = (row[i] - max).exp() / total;
            }
            loss += -(row[t] - max - total.ln());
        }
        let mut value = Tensor::scalar(loss / b as f64);
        value.requires_grad = self.requires(logits);
        Ok(self.push(
            value,
            Op::CrossEntropy {
                logits,
                targets: targets.to_vec(),
                probs,
            },
        ))
    }

    /// Scaled dot-product attention: softmax(q·kᵀ/√d)·v.
    pub fn attention(&mut self, q: TensorId, k: TensorId, v: TensorId) -> Result<TensorId> {
        let (tq, tk, tv) = (
            &self.nodes[q.0].value,
            &self.nodes[k.0].value,
            &self.nodes[v.0].value,
        );
        if tq.rank() != 2 || tk.rank() != 2 || tv.rank() != 2 || tq.shape[1] != tk.shape[1] {
            return Err(TensorError::ShapeMismatch {
                op: "attention",
                lhs: tq.shape.clone(),
                rhs: tk.shape.clone(),
            });
        }
        if tk.shape[0] != tv.shape[0] {
            return Err(TensorError::ShapeMismatch {
                op: "attention",
                lhs: tk.shape.clone(),
                rhs: tv.shape.clone(),
            });
        }
        let d = tq.shape[1];
        let kt = self.transpose(k)?;
        let scores = self.matmul(q, kt)?;
        let scaled = self.scale(scores, 1.0 / (d as f64).sqrt());
        let weights = self.softmax(scaled, 1)?;
        self.matmul(weights, v)
    }

    /// Affine map `x·w + bias`, the everyday layer.
    pub fn linear(&mut self, x: TensorId, w: TensorId, bias: TensorId) -> Result<TensorId> {
        let prod = self.matmul(x, w)?;
        self.add_row(prod, bias)
    }

    /// Reverse sweep from a scalar loss. Gradients of reachable nodes are
    /// accumulated into their tensors; parameter nodes also accumulate into
    /// the store, so calling backward twice without zeroing doubles them.
    pub fn backward(&mut self, loss: TensorId, params: &mut ParamStore) -> Result<()> {
        if !self.nodes[loss.0].value.is_scalar() {
            return Err(TensorError::NotScalar {
                shape: self.nodes[loss.0].value.shape.clone(),
            });
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            if self.nodes[i].value.requires_grad {
                self.nodes[i].value.accumulate_grad(&g);
            }
            let op = self.nodes[i].op.clone();
            match op {
                Op::Leaf => {}
                Op::Param(pid) => params.accumulate_grad(pid, &g),
                Op::MatMul { a, b } => {
                    let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let (m, k, n) = (ta.shape[0], ta.shape[1], tb.shape[1]);
                    if self.requires(a) {
                        // dA = G·Bᵀ
                        let mut da = vec![0.0; m * k];
                        for r in 0..m {
                            for c in 0..k {
                                let mut s = 0.0;
                                for j in 0..n {
                                    s += g[r * n + j] * tb.data[c * n + j];
                                }
                                da[r * k + c] = s;
                            }
                        }
                        accumulate(&mut grads, a, da);
                    }
                    if self.requires(b) {
                        // dB = Aᵀ·G
                        let ta = &self.nodes[a.0].value;
                        let mut db = vec![0.0; k * n];
                        for r in 0..k {
                            for c in 0..n {
                                let mut s = 0.0;
                                for j in 0..m {
                                    s += ta.data[j * k + r] * g[j * n + c];
                                }
                                db[r * n + c] = s;
                            }
                        }
                        accumulate(&mut grads, b, db);
                    }
                }
                Op::Transpose { x } => {
                    let tx = &self.nodes[x.0].value;
                    let (r, c) = (tx.shape[0], tx.shape[1]);
                    let mut dx = vec![0.0; r * c];
                    for i2 in 0..r {
                        for j in 0..c {
                            dx[i2 * c + j] = g[j * r + i2];
                        }
                    }
                    accumulate(&mut grads, x, dx);
                }
                Op::Add { a, b } => {
                    if self.requires(a) {
                        accumulate(&mut grads, a, g.clone());
                    }
                    if self.requires(b) {
                        accumulate(&mut grads, b, g);
                    }
                }
                Op::AddRow { m, bias } => {
                    let cols = self.nodes[bias.0].value.numel();
                    if self.requires(bias) {
                        let mut db = vec![0.0; cols];
                        for (idx, gv) in g.iter().enumerate() {
                            db[idx % cols] += gv;
                        }
                        accumulate(&mut grads, bias, db);
                    }
                    if self.requires(m) {
                        accumulate(&mut grads, m, g);
                    }
                }
                Op::Mul { a, b } => {
                    if self.requires(a) {
                        let tb = &self.nodes[b.0].value;
                        let da = g.iter().zip(&tb.data).map(|(gv, bv)| gv * bv).collect();
                        accumulate(&mut grads, a, da);
                    }
                    if self.requires(b) {
                        let ta = &self.nodes[a.0].value;
                        let db = g.iter().zip(&ta.data).map(|(gv, av)| gv * av).collect();
                        accumulate(&mut grads, b, db);
                    }
                }
                Op::Scale { x, c } => {
                    accumulate(&mut grads, x, g.iter().map(|v| v * c).collect());
                }
                Op::Tanh { x } => {
                    let y = &self.nodes[i].value.data;
                    let dx = g.iter().zip(y).map(|(gv, yv)| gv * (1.0 - yv * yv)).collect();
                    accumulate(&mut grads, x, dx);
                }
                Op::Exp { x } => {
                    let y = &self.nodes[i].value.data;
                    let dx = g.iter().zip(y).map(|(gv, yv)| gv * yv).collect();
                    accumulate(&mut grads, x, dx);
                }
                Op::Sum { x } => {
                    let n = self.nodes[x.0].value.numel();
                    accumulate(&mut grads, x, vec![g[0]; n]);
                }
                Op::Mean { x } => {
                    let n = self.nodes[x.0].value.numel();
                    accumulate(&mut grads, x, vec![g[0] / n as f64; n]);
                }
                Op::Element { x, index } => {
                    let mut dx = vec![0.0; self.nodes[x.0].value.numel()];
                    dx[index] = g[0];
                    accumulate(&mut grads, x, dx);
                }
                Op::Reshape { x } => {
                    accumulate(&mut grads, x, g);
                }
                Op::Concat { parts, axis } => {
                    let rank = self.nodes[parts[0].0].value.rank();
                    if rank == 1 || axis == 0 {
                        let mut offset = 0;
                        for p in parts {
                            let n = self.nodes[p.0].value.numel();
                            if self.requires(p) {
                                accumulate(&mut grads, p, g[offset..offset + n].to_vec());
                            }
                            offset += n;
                        }
                    } else {
                        let rows = self.nodes[i].value.shape[0];
                        let total_cols = self.nodes[i].value.shape[1];
                        let mut col_offset = 0;
                        for p in parts {
                            let c = self.nodes[p.0].value.shape[1];
                            if self.requires(p) {
                                let mut dp = vec![0.0; rows * c];
                                for r in 0..rows {
                                    for j in 0..c {
                                        dp[r * c + j] = g[r * total_cols + col_offset + j];
                                    }
                                }
                                accumulate(&mut grads, p, dp);
                            }
                            col_offset += c;
                        }
                    }
                }
                Op::GatherRows { table, ids } => {
                    let tt = &self.nodes[table.0].value;
                    let cols = tt.shape[1];
                    let mut dt = vec![0.0; tt.numel()];
                    for (r, &id) in ids.iter().enumerate() {
                        for j in 0..cols {
                            dt[id * cols + j] += g[r * cols + j];
                        }
                    }
                    accumulate(&mut grads, table, dt);
                }
                Op::GatherCols { x, ids } => {
                    let tx = &self.nodes[x.0].value;
                    let (rows, cols) = (tx.shape[0], tx.shape[1]);
                    let mut dx = vec![0.0; rows * cols];
                    for r in 0..rows {
                        for (j, &id) in ids.iter().enumerate() {
                            dx[r * cols + id] += g[r * ids.len() + j];
                        }
                    }
                    accumulate(&mut grads, x, dx);
                }
                Op::Softmax { x, axis } => {
                    let y = &self.nodes[i].value;
                    let (lanes, lane_len, stride) =
                        lane_layout(&y.shape, axis).expect("validated at forward");
                    let mut dx = vec![0.0; y.numel()];
                    for lane in 0..lanes {
                        let base = lane_base(lane, lane_len, stride);
                        let mut dot = 0.0;
                        for j in 0..lane_len {
                            let idx = base + j * stride;
                            dot += g[idx] * y.data[idx];
                        }
                        for j in 0..lane_len {
                            let idx = base + j * stride;
                            dx[idx] = (g[idx] - dot) * y.data[idx];
                        }
                    }
                    accumulate(&mut grads, x, dx);
                }
                Op::LayerNorm {
                    x,
                    gain,
                    bias,
                    normalized,
                    inv_std,
                } => {
                    let tg = &self.nodes[gain.0].value;
                    let d = tg.numel();
                    let rows = normalized.len() / d;
                    if self.requires(gain) {
                        let mut dg = vec![0.0; d];
                        for r in 0..rows {
                            for j in 0..d {
                                dg[j] += g[r * d + j] * normalized[r * d + j];
                            }
                        }
                        accumulate(&mut grads, gain, dg);
                    }
                    if self.requires(bias) {
                        let mut db = vec![0.0; d];
                        for r in 0..rows {
                            for j in 0..d {
                                db[j] += g[r * d + j];
                            }
                        }
                        accumulate(&mut grads, bias, db);
                    }
                    if self.requires(x) {
                        let mut dx = vec![0.0; rows * d];
                        for r in 0..rows {
                            let mut mean_dxh = 0.0;
                            let mut mean_dxh_xh = 0.0;
                            for j in 0..d {
                                let dxh = g[r * d + j] * tg.data[j];
                                mean_dxh += dxh;
                                mean_dxh_xh += dxh * normalized[r * d + j];
                            }
                            mean_dxh /= d as f64;
                            mean_dxh_xh /= d as f64;
                            for j in 0..d {
                                let dxh = g[r * d + j] * tg.data[j];
                                dx[r * d + j] = inv_std[r]
                                    * (dxh - mean_dxh - normalized[r * d + j] * mean_dxh_xh);
                            }
                        }
                        accumulate(&mut grads, x, dx);
                    }
                }
                Op::CrossEntropy {
                    logits,
                    targets,
                    probs,
                } => {
                    let b = targets.len();
                    let c = probs.len() / b;
                    let mut dl = vec![0.0; probs.len()];
                    let scale = g[0] / b as f64;
                    for (r, &t) in targets.iter().enumerate() {
                        for j in 0..c {
                            let indicator = if j == t { 1.0 } else { 0.0 };
                            dl[r * c + j] = (probs[r * c + j] - indicator) * scale;
                        }
                    }
                    accumulate(&mut grads, logits, dl);
                }
            }
        }
        Ok(())
    }
}

fn accumulate(grads: &mut [Option<Vec<f64>>], id: TensorId, delta: Vec<f64>) {
    match &mut grads[id.0] {
        Some(existing) => {
            for (e, d) in existing.iter_mut().zip(&delta) {
                *e += d;
            }
        }
        slot => *slot = Some(delta),
    }
}

/// Decompose a rank-1/2 shape into softmax lanes along `axis`:
/// (lane count, lane length, stride between lane elements).
fn lane_layout(shape: &[usize], axis: usize) -> Option<(usize, usize, usize)> {
    match (shape.len(), axis) {
        (1, 0) => Some((1, shape[0], 1)),
        (2, 1) => Some((shape[0], shape[1], 1)),
        (2, 0) => Some((shape[1], shape[0], shape[1])),
        _ => None,
    }
}

fn lane_base(lane: usize, lane_len: usize, stride: usize) -> usize {
    if stride == 1 {
        lane * lane_len
    } else {
        lane
    }
}

pub(crate) fn matmul_raw(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += av * brow[j];
            }
        }
    }
    out
}
