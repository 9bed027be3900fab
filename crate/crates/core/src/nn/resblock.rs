use ndarray::Array4;
use rand::Rng;

use crate::error::Result;
use crate::scalar::Scalar;

use super::{backward_seq, forward_seq, Conv2d, InstanceNorm2d, Layer, Param, Relu};

/// Channel- and size-preserving residual block: two 3x3 convolutions with
/// normalization, ReLU between them, identity skip.
pub struct ResidualBlock<F: Scalar> {
    branch: Vec<Box<dyn Layer<F>>>,
}

impl<F: Scalar> ResidualBlock<F> {
    pub fn new<R: Rng>(channels: usize, normalize: bool, init_std: f64, rng: &mut R) -> Self {
        let mut branch: Vec<Box<dyn Layer<F>>> = Vec::new();
        branch.push(Box::new(Conv2d::new(channels, channels, 3, 1, 1, init_std, rng)));
        if normalize {
            branch.push(Box::new(InstanceNorm2d::new()));
        }
        branch.push(Box::new(Relu::new()));
        branch.push(Box::new(Conv2d::new(channels, channels, 3, 1, 1, init_std, rng)));
        if normalize {
            branch.push(Box::new(InstanceNorm2d::new()));
        }
        ResidualBlock { branch }
    }
}

impl<F: Scalar> Layer<F> for ResidualBlock<F> {
    fn forward(&mut self, x: &Array4<F>, cache: bool) -> Result<Array4<F>> {
        let t = forward_seq(&mut self.branch, x, cache)?;
        Ok(x + &t)
    }

    fn backward(&mut self, grad_out: &Array4<F>) -> Array4<F> {
        let g_branch = backward_seq(&mut self.branch, grad_out);
        grad_out + &g_branch
    }

    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param<F>)) {
        for layer in &mut self.branch {
            layer.visit_params(f);
        }
    }

    fn clear_cache(&mut self) {
        for layer in &mut self.branch {
            layer.clear_cache();
        }
    }
}
