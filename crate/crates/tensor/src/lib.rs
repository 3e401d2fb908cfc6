//! Dense 64-bit tensors with a tape-based reverse-mode autodiff engine,
//! an AdamW optimizer, named-parameter checkpoints, and finite-difference
//! gradient checking.
//!
//! The tape is rebuilt on every forward pass. Learned parameters live in a
//! [`ParamStore`] that outlives tapes; `Tape::param` places a parameter on
//! the current tape and `Tape::backward` accumulates gradients back into the
//! store. Everything is single-threaded by design: reduction order is fixed,
//! so identical seeds give bitwise-identical results.

mod checkpoint;
mod error;
pub mod gradcheck;
mod optim;
mod params;
mod tape;
mod tensor;

pub use checkpoint::{load_params, save_params};
pub use error::TensorError;
pub use optim::{AdamW, AdamWConfig};
pub use params::{ParamId, ParamStore};
pub use tape::{Tape, TensorId};
pub use tensor::Tensor;

pub type Result<T> = std::result::Result<T, TensorError>;
