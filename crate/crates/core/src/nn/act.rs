use ndarray::Array4;

use crate::error::Result;
use crate::scalar::Scalar;

use super::Layer;

pub struct Relu<F: Scalar> {
    cache: Vec<Array4<F>>, // input
}

impl<F: Scalar> Relu<F> {
    pub fn new() -> Self {
        Relu { cache: Vec::new() }
    }
}

impl<F: Scalar> Default for Relu<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> Layer<F> for Relu<F> {
    fn forward(&mut self, x: &Array4<F>, cache: bool) -> Result<Array4<F>> {
        if cache {
            self.cache.push(x.clone());
        }
        Ok(x.mapv(|v| if v > F::zero() { v } else { F::zero() }))
    }

    fn backward(&mut self, grad_out: &Array4<F>) -> Array4<F> {
        let x = self.cache.pop().expect("relu backward without forward");
        let mut g = grad_out.clone();
        g.zip_mut_with(&x, |gv, &xv| {
            if xv <= F::zero() {
                *gv = F::zero();
            }
        });
        g
    }

    fn clear_cache(&mut self) {
        self.cache.clear();
    }
}

pub struct LeakyRelu<F: Scalar> {
    slope: F,
    cache: Vec<Array4<F>>,
}

impl<F: Scalar> LeakyRelu<F> {
    pub fn new(slope: f64) -> Self {
        LeakyRelu {
            slope: F::of_f64(slope),
            cache: Vec::new(),
        }
    }
}

impl<F: Scalar> Layer<F> for LeakyRelu<F> {
    fn forward(&mut self, x: &Array4<F>, cache: bool) -> Result<Array4<F>> {
        if cache {
            self.cache.push(x.clone());
        }
        let slope = self.slope;
        Ok(x.mapv(|v| if v > F::zero() { v } else { v * slope }))
    }

    fn backward(&mut self, grad_out: &Array4<F>) -> Array4<F> {
        let x = self.cache.pop().expect("leaky relu backward without forward");
        let slope = self.slope;
        let mut g = grad_out.clone();
        g.zip_mut_with(&x, |gv, &xv| {
            if xv <= F::zero() {
                *gv *= slope;
            }
        });
        g
    }

    fn clear_cache(&mut self) {
        self.cache.clear();
    }
}

pub struct Tanh<F: Scalar> {
    cache: Vec<Array4<F>>, // output
}

impl<F: Scalar> Tanh<F> {
    pub fn new() -> Self {
        Tanh { cache: Vec::new() }
    }
}

impl<F: Scalar> Default for Tanh<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> Layer<F> for Tanh<F> {
    fn forward(&mut self, x: &Array4<F>, cache: bool) -> Result<Array4<F>> {
        let y = x.mapv(|v| v.tanh());
        if cache {
            self.cache.push(y.clone());
        }
        Ok(y)
    }

    fn backward(&mut self, grad_out: &Array4<F>) -> Array4<F> {
        let y = self.cache.pop().expect("tanh backward without forward");
        let mut g = grad_out.clone();
        g.zip_mut_with(&y, |gv, &yv| *gv *= F::one() - yv * yv);
        g
    }

    fn clear_cache(&mut self) {
        self.cache.clear();
    }
}
