//! Minimal dense numerical core: tensors, a deterministic RNG, a gradient
//! tape with exact analytic backward passes, SGD with weight decay, and a
//! finite-difference gradient checker.
//!
//! Everything runs on 64-bit floats. The models this crate trains are small
//! enough that precision is worth more than speed.

mod gradcheck;
mod ops;
mod rng;
mod tape;
mod tensor;

pub use gradcheck::{grad_check, GradCheckReport};
pub use ops::{cross_entropy, sigmoid_scalar, softmax, tanh_scalar};
pub use rng::Rng;
pub use tape::{Gradients, NodeId, Tape};
pub use tensor::{Param, ParamId, ParamStore, Tensor2};

use crate::error::{Error, Result};

/// One SGD update with decoupled L2 weight decay:
/// `p <- p - lr * (grad + weight_decay * p)` for every trainable parameter
/// that has a gradient entry. Frozen parameters are never touched.
pub fn sgd_step(
    params: &mut ParamStore,
    grads: &Gradients,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    for (id, grad) in grads.iter() {
        let param = params.get(id);
        if !param.trainable {
            continue;
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                param: param.name.clone(),
            });
        }
        let param = params.get_mut(id);
        for (p, g) in param.value.values.iter_mut().zip(grad.iter()) {
            *p -= lr * (g + weight_decay * *p);
        }
    }
    Ok(())
}
