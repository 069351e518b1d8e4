//! Minimal neural substrate: dense matrices, a reverse-mode tape, affine and
//! attention layers, Adam, and named-tensor checkpoints.

mod adam;
mod checkpoint;
mod layers;
mod matrix;
mod tape;

pub use adam::Adam;
pub use checkpoint::Checkpoint;
pub use layers::{init_uniform, Linear, MultiHeadAttention};
pub use matrix::Matrix;
pub use tape::{attention_probs, sigmoid, Gradients, ParamId, ParamStore, Tape, Var};

use crate::error::{Error, Result};

/// `target ← τ·online + (1−τ)·target`, elementwise over every parameter.
pub fn soft_update(online: &ParamStore, target: &mut ParamStore, tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidInput(format!("tau {tau} outside [0, 1]")));
    }
    if online.len() != target.len() {
        return Err(Error::Shape("online and target parameter counts differ".into()));
    }
    for id in online.ids() {
        if online.get(id).shape() != target.get(id).shape() {
            return Err(Error::Shape(format!(
                "parameter `{}` shapes differ",
                online.name(id)
            )));
        }
    }
    for id in online.ids() {
        let src = online.get(id);
        let dst = target.get_mut(id);
        for (t, o) in dst.as_mut_slice().iter_mut().zip(src.as_slice()) {
            *t = tau * o + (1.0 - tau) * *t;
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) use layers::tests::{fd_param_grad, rel_err};
