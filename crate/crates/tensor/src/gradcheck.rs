//! Finite-difference gradient checking.
//!
//! A check builds the same scalar loss twice: once on a tape for analytic
//! gradients, then once per perturbed input element for central differences
//! (f(x+h) − f(x−h)) / 2h. Errors are relative, |a − n| / max(|a| + |n|, 1e-6),
//! so tiny true gradients don't drown in floating-point noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Result, Tape, Tensor, TensorId};

pub const DEFAULT_STEP: f64 = 1e-5;

/// Builds a scalar loss from leaf inputs already placed on the tape.
pub type Build = dyn Fn(&mut Tape, &[TensorId]) -> Result<TensorId>;

/// Maximum relative error between analytic and central-difference gradients
/// over every element of every input.
pub fn check(inputs: &[Tensor], build: &Build, h: f64) -> Result<f64> {
    let loss_at = |tensors: &[Tensor]| -> Result<f64> {
        let mut tape = Tape::new();
        let ids: Vec<TensorId> = tensors.iter().map(|t| tape.leaf(t.clone())).collect();
        let out = build(&mut tape, &ids)?;
        Ok(tape.value(out).item())
    };

    let mut tape = Tape::new();
    let ids: Vec<TensorId> = inputs
        .iter()
        .map(|t| tape.leaf(t.clone().with_grad()))
        .collect();
    let out = build(&mut tape, &ids)?;
    let mut store = crate::ParamStore::new();
    tape.backward(out, &mut store)?;
    let analytic: Vec<Vec<f64>> = ids
        .iter()
        .map(|id| tape.grad(*id).map(|g| g.to_vec()).unwrap_or_default())
        .collect();

    let mut worst = 0.0_f64;
    let mut work: Vec<Tensor> = inputs.to_vec();
    for (i, input) in inputs.iter().enumerate() {
        for j in 0..input.numel() {
            let original = input.data[j];
            work[i].data[j] = original + h;
            let plus = loss_at(&work)?;
            work[i].data[j] = original - h;
            let minus = loss_at(&work)?;
            work[i].data[j] = original;
            let numeric = (plus - minus) / (2.0 * h);
            let a = if analytic[i].is_empty() {
                0.0
            } else {
                analytic[i][j]
            };
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

pub struct CheckOutcome {
    pub name: &'static str,
    pub instances: usize,
    pub max_rel_err: f64,
}

impl CheckOutcome {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_rel_err.is_finite() && self.max_rel_err < tol
    }
}

pub struct SuiteReport {
    pub checks: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn all_passed(&self, tol: f64) -> bool {
        self.checks.iter().all(|c| c.passed(tol))
    }

    pub fn lines(&self, tol: f64) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "gradcheck {:<16} max_rel_err {:>10.3e} over {} instances ... {}",
                    c.name,
                    c.max_rel_err,
                    c.instances,
                    if c.passed(tol) { "ok" } else { "FAILED" }
                )
            })
            .collect()
    }
}

type Case = (Vec<Tensor>, Box<Build>);

fn randn(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    Tensor::randn(shape, 1.0, rng)
}

fn dim(rng: &mut ChaCha8Rng) -> usize {
    rng.gen_range(1..5)
}

/// Scalarize `out` as sum(out ⊙ w) for a fixed random weight tensor, so the
/// check exercises every output element with a distinct sensitivity.
fn weighted(tape: &mut Tape, out: TensorId, w: &Tensor) -> Result<TensorId> {
    let wid = tape.leaf(w.clone());
    let prod = tape.mul(out, wid)?;
    Ok(tape.sum(prod))
}

fn case(name: &str, rng: &mut ChaCha8Rng) -> Case {
    match name {
        "matmul" => {
            let (m, k, n) = (dim(rng), dim(rng), dim(rng));
            let inputs = vec![randn(rng, &[m, k]), randn(rng, &[k, n])];
            let w = randn(rng, &[m, n]);
            (
                inputs,
                Box::new(move |t, ids| {
                    let out = t.matmul(ids[0], ids[1])?;
                    weighted(t, out, &w)
                }),
            )
        }
        "transpose" => {
            let (r, c) = (dim(rng), dim(rng));
            let inputs = vec![randn(rng, &[r, c])];
            let w = randn(rng, &[c, r]);
            (
                inputs,
                Box::new(move |t, ids| {
                    let out = t.transpose(ids[0])?;
                    weighted(t, out, &w)
                }),
            )
        }
        "add" => {
            let (r, c) = (dim(rng), dim(rng));
            let inputs = vec![randn(rng, &[r, c]), randn(rng, &[r, c])];
            let w = randn(rng, &[r, c]);
            (
                inputs,
                Box::new(move |t, ids| {
                    let out = t.add(ids[0], ids[1])?;
                    weighted(t, out, &w)
                }),
            )
        }
        "add_row" => {
            let (r, c) = (dim(rng), dim(rng));
            let inputs = vec![randn(rng, &[r, c]), randn(rng, &[c])];
            let w = randn(rng, &[r, c]);
            (
                inputs,
                Box::new(move |t, ids| {
                    let out = t.add_row(ids[0], ids[1])?;
                    weighted(t, out, &w)
                }),
            )
        }
        "mul" => {
            let (r, c) = (dim(rng), dim(rng));
            let inputs = vec![randn(rng, &[r, c]), randn(rng, &[r, c])];
            let w = randn(rng, &[r, c]);
            (
                inputs,
                Box::new(move |t, ids| {
                    let out = t.mul(ids[0], ids[1])?;
                    weighted(t, out, &w)
                }),
            )
        }
        "scale" => {
            let n = dim(rng);
            let c = rng.gen_range(-2.0..2.0);
            let inputs = vec![randn(rng, &[n])];
            let w = randn(rng, &[n]);
            (
                inputs,
                Box::new(move |t, ids| {
                    let out = t.scale(ids[0], c);
                    weighted(t, out, &w)
                }),
            )
        }
        "tanh" => {
            let n = dim(rng);
            let inputs = vec![randn(rng, &[n])];
            let w = randn(rng, &[n]);
            (
                inputs,
                Box::new(move |t, ids| {
                    let out = t.tanh(ids[0]);
                    weighted(t, out, &w)
                }),
            )
        }
        "exp" => {
            let n = dim(rng);
            let inputs = vec![Tensor::randn(&[n], 0.5, rng)];
            let w = randn(rng, &[n]);
            (
                inputs,
                Box::new(move |t, ids| {
                    let out = t.exp(ids[0]);
                    weighted(t, out, &w)
                }),
            )
        }
        "sum" => {
            let (r, c) = (dim(rng), dim(rng));
            let inputs = vec![randn(rng, &[r, c])];
            (inputs, Box::new(move |t, ids| Ok(t.sum(ids[0]))))
        }
        "mean" => {
            let (r, c) = (dim(rng), dim(rng));
            let inputs = vec![randn(rng, &[r, c])];
            (inputs, Box::new(move |t, ids| Ok(t.mean(ids[0]))))
        }
        "element" => {
            let n = dim(rng) + 1;
            let idx = rng.gen_range(0..n);
            let inputs = vec![randn(rng, &[n])];
            (inputs, Box::new(move |t, ids| t.element(ids[0], idx)))
        }
        "reshape" => {
            let (r, c) = (dim(rng), dim(rng));
            let inputs = vec![randn(rng, &[r, c])];
            let w = randn(rng, &[r * c]);
            (
                inputs,
                Box::new(move |t, ids| {
                    let n = t.value(ids[0]).numel();
                    let out = t.reshape(ids[0], &[n])?;
                    weighted(t, out, &w)
                }),
            )
        }
        "concat_axis0" => {
            let (r1, r2, c) = (dim(rng), dim(rng), dim(rng));
            let inputs = vec![randn(rng, &[r1, c]), randn(rng, &[r2, c])];
            let w = randn(rng, &[r1 + r2, c]);
            (
                inputs,
                Box::new(move |t, ids| {
                    let out = t.concat(ids, 0)?;
                    weighted(t, out, &w)
                }),
            )
        }
        "concat_axis1" => {
            let (r, c1, c2) = (dim(rng), dim(rng), dim(rng));
            let inputs = vec![randn(rng, &[r, c1]), randn(rng, &[r, c2])];
            let w = randn(rng, &[r, c1 + c2]);
            (
                inputs,
                Box::new(move |t, ids| {
                    let out = t.concat(ids, 1)?;
                    weighted(t, out, &w)
                }),
            )
        }
        "gather_rows" => {
            let (v, d, n) = (dim(rng) + 1, dim(rng), dim(rng) + 1);
            let ids: Vec<usize> = (0..n).map(|_| rng.gen_range(0..v)).collect();
            let inputs = vec![randn(rng, &[v, d])];
            let w = randn(rng, &[n, d]);
            (
                inputs,
                Box::new(move |t, tids| {
                    let out = t.gather_rows(tids[0], &ids)?;
                    weighted(t, out, &w)
                }),
            )
        }
        "gather_cols" => {
            let (r, c, n) = (dim(rng), dim(rng) + 1, dim(rng) + 1);
            let ids: Vec<usize> = (0..n).map(|_| rng.gen_range(0..c)).collect();
            let inputs = vec![randn(rng, &[r, c])];
            let w = randn(rng, &[r, n]);
            (
                inputs,
                Box::new(move |t, tids| {
                    let out = t.gather_cols(tids[0], &ids)?;
                    weighted(t, out, &w)
                }),
            )
        }
        "softmax_vec" => {
            let n = dim(rng) + 1;
            let inputs = vec![randn(rng, &[n])];
            let w = randn(rng, &[n]);
            (
                inputs,
                Box::new(move |t, ids| {
                    let out = t.softmax(ids[0], 0)?;
                    weighted(t, out, &w)
                }),
            )
        }
        "softmax_rows" => {
            let (r, c) = (dim(rng), dim(rng) + 1);
            let inputs = vec![randn(rng, &[r, c])];
            let w = randn(rng, &[r, c]);
            (
                inputs,
                Box::new(move |t, ids| {
                    let out = t.softmax(ids[0], 1)?;
                    weighted(t, out, &w)
                }),
            )
        }
        "softmax_cols" => {
            let (r, c) = (dim(rng) + 1, dim(rng));
            let inputs = vec![randn(rng, &[r, c])];
            let w = randn(rng, &[r, c]);
            (
                inputs,
                Box::new(move |t, ids| {
                    let out = t.softmax(ids[0], 0)?;
                    weighted(t, out, &w)
                }),
            )
        }
        "layer_norm" => {
            let (r, d) = (dim(rng), dim(rng) + 1);
            let inputs = vec![randn(rng, &[r, d]), randn(rng, &[d]), randn(rng, &[d])];
            let w = randn(rng, &[r, d]);
            (
                inputs,
                Box::new(move |t, ids| {
                    let out = t.layer_norm(ids[0], ids[1], ids[2])?;
                    weighted(t, out, &w)
                }),
            )
        }
        "cross_entropy" => {
            let (b, c) = (dim(rng), dim(rng) + 1);
            let targets: Vec<usize> = (0..b).map(|_| rng.gen_range(0..c)).collect();
            let inputs = vec![randn(rng, &[b, c])];
            (
                inputs,
                Box::new(move |t, ids| t.cross_entropy(ids[0], &targets)),
            )
        }
        "attention" => {
            let (nq, nk, d, dv) = (dim(rng), dim(rng), dim(rng), dim(rng));
            let inputs = vec![
                randn(rng, &[nq, d]),
                randn(rng, &[nk, d]),
                randn(rng, &[nk, dv]),
            ];
            let w = randn(rng, &[nq, dv]);
            (
                inputs,
                Box::new(move |t, ids| {
                    let out = t.attention(ids[0], ids[1], ids[2])?;
                    weighted(t, out, &w)
                }),
            )
        }
        "linear" => {
            let (r, c, o) = (dim(rng), dim(rng), dim(rng));
            let inputs = vec![randn(rng, &[r, c]), randn(rng, &[c, o]), randn(rng, &[o])];
            let w = randn(rng, &[r, o]);
            (
                inputs,
                Box::new(move |t, ids| {
                    let out = t.linear(ids[0], ids[1], ids[2])?;
                    weighted(t, out, &w)
                }),
            )
        }
        other => unreachable!("unknown gradcheck case {other}"),
    }
}

pub const CASE_NAMES: &[&str] = &[
    "matmul",
    "transpose",
    "add",
    "add_row",
    "mul",
    "scale",
    "tanh",
    "exp",
    "sum",
    "mean",
    "element",
    "reshape",
    "concat_axis0",
    "concat_axis1",
    "gather_rows",
    "gather_cols",
    "softmax_vec",
    "softmax_rows",
    "softmax_cols",
    "layer_norm",
    "cross_entropy",
    "attention",
    "linear",
];

/// Run `instances` random finite-difference checks per primitive.
pub fn run_suite(seed: u64, instances: usize) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    for (i, name) in CASE_NAMES.iter().enumerate() {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ (i as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut max_rel_err = 0.0_f64;
        for _ in 0..instances {
            let (inputs, build) = case(name, &mut rng);
            max_rel_err = max_rel_err.max(check(&inputs, build.as_ref(), DEFAULT_STEP)?);
        }
        checks.push(CheckOutcome {
            name,
            instances,
            max_rel_err,
        });
    }
    Ok(SuiteReport { checks })
}
