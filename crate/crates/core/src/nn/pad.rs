use ndarray::Array4;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::Layer;

fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let r = if i < 0 { -i } else if i >= n { 2 * n - 2 - i } else { i };
    r as usize
}

/// Mirror-pads the two spatial axes by `pad` on every side.
pub struct ReflectionPad2d {
    pad: usize,
    shapes: Vec<(usize, usize)>,
}

impl ReflectionPad2d {
    pub fn new(pad: usize) -> Self {
        ReflectionPad2d {
            pad,
            shapes: Vec::new(),
        }
    }
}

impl<F: Scalar> Layer<F> for ReflectionPad2d {
    fn forward(&mut self, x: &Array4<F>, cache: bool) -> Result<Array4<F>> {
        let (n, c, h, w) = x.dim();
        let p = self.pad;
        if h <= p || w <= p {
            return Err(Error::shape(
                format!("spatial size > pad {p}"),
                format!("{h}x{w}"),
            ));
        }
        let mut y = Array4::zeros((n, c, h + 2 * p, w + 2 * p));
        for i in 0..n {
            for ci in 0..c {
                for oi in 0..h + 2 * p {
                    let si = reflect(oi as isize - p as isize, h);
                    for oj in 0..w + 2 * p {
                        let sj = reflect(oj as isize - p as isize, w);
                        y[[i, ci, oi, oj]] = x[[i, ci, si, sj]];
                    }
                }
            }
        }
        if cache {
            self.shapes.push((h, w));
        }
        Ok(y)
    }

    fn backward(&mut self, grad_out: &Array4<F>) -> Array4<F> {
        let (h, w) = self.shapes.pop().expect("pad backward without forward");
        let (n, c, _, _) = grad_out.dim();
        let p = self.pad;
        let mut gx = Array4::zeros((n, c, h, w));
        for i in 0..n {
            for ci in 0..c {
                for oi in 0..h + 2 * p {
                    let si = reflect(oi as isize - p as isize, h);
                    for oj in 0..w + 2 * p {
                        let sj = reflect(oj as isize - p as isize, w);
                        gx[[i, ci, si, sj]] += grad_out[[i, ci, oi, oj]];
                    }
                }
            }
        }
        gx
    }

    fn clear_cache(&mut self) {
        self.shapes.clear();
    }
}
