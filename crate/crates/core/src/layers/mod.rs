//! Network layers with forward and backward passes.
//!
//! Every layer works on batched tensors. Sequence activations are `[B, T, C]`
//! (the singleton frequency axis of the conv stack is kept squeezed), pooled
//! activations are `[B, C]`.
//!
//! [`Layer::forward`] is pure and uses inference behaviour (batch norm reads
//! its running statistics). [`Layer::forward_train`] records what
//! [`Layer::backward`] needs; backward consumes that record.

mod batchnorm;
mod block;
mod dense;
mod freq_conv;
mod gru;
mod pool;
mod septemp;
mod swsa;

pub use batchnorm::{BatchNorm, Mode, BN_EPSILON, BN_MOMENTUM};
pub use block::Block;
pub use dense::Dense;
pub use freq_conv::FreqCollapseConv;
pub use gru::{Bgru, GruDirection};
pub use pool::AvgPool;
pub use septemp::{SeparableTemporalConv, KERNEL_TIME};
pub use swsa::Swsa;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Gradients from one backward pass, parameters in [`Layer::params`] order.
#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub input: Tensor,
    pub params: Vec<Tensor>,
}

pub trait Layer {
    fn kind(&self) -> &'static str;

    fn forward(&self, x: &Tensor) -> Result<Tensor>;

    fn forward_train(&mut self, x: &Tensor) -> Result<Tensor>;

    fn backward(&mut self, grad_out: &Tensor) -> Result<LayerGrads>;

    /// Trainable parameters with short local names.
    fn params(&self) -> Vec<(&'static str, &Tensor)>;

    fn params_mut(&mut self) -> Vec<&mut Tensor>;

    /// Non-trainable state that must be persisted (batch norm running stats).
    fn buffers(&self) -> Vec<(&'static str, &Tensor)> {
        Vec::new()
    }

    /// Parameters followed by buffers, matching `params` then `buffers`.
    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.params_mut()
    }
}

/// Uniform initialization with variance `1 / fan_in`.
pub(crate) fn fan_in_uniform(shape: &[usize], fan_in: usize, rng: &mut impl Rng) -> Tensor {
    let limit = (3.0 / fan_in as f64).sqrt();
    Tensor::from_fn(shape, |_| rng.gen_range(-limit..limit))
}

pub(crate) fn dims3(op: &'static str, x: &Tensor, channels: usize) -> Result<(usize, usize)> {
    match *x.shape() {
        [b, t, c] if c == channels => Ok((b, t)),
        _ => Err(Error::shape(op, x.shape(), &[0, 0, channels])),
    }
}

pub(crate) fn check_grad_shape(op: &'static str, grad: &Tensor, expected: &[usize]) -> Result<()> {
    if grad.shape() != expected {
        return Err(Error::shape(op, grad.shape(), expected));
    }
    Ok(())
}
