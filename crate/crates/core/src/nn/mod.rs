//! Layer primitives with explicit forward/backward passes.
//!
//! Layers cache what backward needs on a stack, so the same network can be
//! run forward several times per iteration (the cycle passes) and backed
//! through in reverse order of the forward calls.

mod act;
mod conv;
mod norm;
mod pad;
mod resblock;

pub use act::{LeakyRelu, Relu, Tanh};
pub use conv::{conv_out_size, Conv2d, ConvTranspose2d};
pub use norm::InstanceNorm2d;
pub use pad::ReflectionPad2d;
pub use resblock::ResidualBlock;

use ndarray::{Array4, ArrayD};

use crate::error::Result;
use crate::scalar::Scalar;

/// A trainable tensor together with its accumulated gradient.
pub struct Param<F: Scalar> {
    pub value: ArrayD<F>,
    pub grad: ArrayD<F>,
}

impl<F: Scalar> Param<F> {
    pub fn new(value: ArrayD<F>) -> Self {
        let grad = ArrayD::zeros(value.raw_dim());
        Param { value, grad }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(F::zero());
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

pub trait Layer<F: Scalar>: Send {
    /// Run the layer on a (N, C, H, W) batch. With `cache` set, pushes
    /// whatever backward will need onto the layer's cache stack.
    fn forward(&mut self, x: &Array4<F>, cache: bool) -> Result<Array4<F>>;

    /// Pop the most recent cached forward pass and propagate gradients.
    /// Parameter gradients accumulate; the input gradient is returned.
    fn backward(&mut self, grad_out: &Array4<F>) -> Array4<F>;

    fn visit_params(&mut self, _f: &mut dyn FnMut(&mut Param<F>)) {}

    fn clear_cache(&mut self);
}

pub(crate) fn forward_seq<F: Scalar>(
    layers: &mut [Box<dyn Layer<F>>],
    x: &Array4<F>,
    cache: bool,
) -> Result<Array4<F>> {
    let mut cur = None;
    for layer in layers.iter_mut() {
        let out = layer.forward(cur.as_ref().unwrap_or(x), cache)?;
        cur = Some(out);
    }
    Ok(cur.unwrap_or_else(|| x.clone()))
}

pub(crate) fn backward_seq<F: Scalar>(
    layers: &mut [Box<dyn Layer<F>>],
    grad_out: &Array4<F>,
) -> Array4<F> {
    let mut cur = grad_out.clone();
    for layer in layers.iter_mut().rev() {
        cur = layer.backward(&cur);
    }
    cur
}
