use ndarray::{Array2, Array4, Axis};

use crate::error::Result;
use crate::scalar::Scalar;

use super::Layer;

struct NormCache<F: Scalar> {
    xhat: Array4<F>,
    inv_std: Array2<F>, // (n, c)
}

/// Per-sample, per-channel normalization without learned affine parameters.
pub struct InstanceNorm2d<F: Scalar> {
    eps: F,
    cache: Vec<NormCache<F>>,
}

impl<F: Scalar> InstanceNorm2d<F> {
    pub fn new() -> Self {
        InstanceNorm2d {
            eps: F::of_f64(1e-5),
            cache: Vec::new(),
        }
    }
}

impl<F: Scalar> Default for InstanceNorm2d<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> Layer<F> for InstanceNorm2d<F> {
    fn forward(&mut self, x: &Array4<F>, cache: bool) -> Result<Array4<F>> {
        let (n, c, h, w) = x.dim();
        let count = F::of_f64((h * w) as f64);
        let mut y = x.clone();
        let mut inv_std = Array2::zeros((n, c));
        for i in 0..n {
            for ci in 0..c {
                let mut plane = y.index_axis_mut(Axis(0), i);
                let mut plane = plane.index_axis_mut(Axis(0), ci);
                let mean = plane.sum() / count;
                plane -= mean;
                let var = plane.fold(F::zero(), |acc, &v| acc + v * v) / count;
                let istd = F::one() / (var + self.eps).sqrt();
                plane *= istd;
                inv_std[[i, ci]] = istd;
            }
        }
        if cache {
            self.cache.push(NormCache {
                xhat: y.clone(),
                inv_std,
            });
        }
        Ok(y)
    }

    fn backward(&mut self, grad_out: &Array4<F>) -> Array4<F> {
        let cached = self.cache.pop().expect("norm backward without forward");
        let (n, c, h, w) = grad_out.dim();
        let count = F::of_f64((h * w) as f64);
        let mut gx = grad_out.clone();
        for i in 0..n {
            for ci in 0..c {
                let xhat = cached.xhat.index_axis(Axis(0), i);
                let xhat = xhat.index_axis(Axis(0), ci);
                let mut g = gx.index_axis_mut(Axis(0), i);
                let mut g = g.index_axis_mut(Axis(0), ci);
                let g_mean = g.sum() / count;
                let gx_dot = g
                    .iter()
                    .zip(xhat.iter())
                    .fold(F::zero(), |acc, (&gv, &xv)| acc + gv * xv)
                    / count;
                let istd = cached.inv_std[[i, ci]];
                g.zip_mut_with(&xhat, |gv, &xv| {
                    *gv = (*gv - g_mean - xv * gx_dot) * istd;
                });
            }
        }
        gx
    }

    fn clear_cache(&mut self) {
        self.cache.clear();
    }
}
