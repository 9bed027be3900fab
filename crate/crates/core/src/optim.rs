//! Adam with bias correction; one state per network.

use ndarray::ArrayD;
use serde::{Deserialize, Serialize};

use crate::config::OptimizerConfig;
use crate::models::Network;
use crate::scalar::Scalar;

#[derive(Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct AdamState<F: Scalar> {
    pub m: Vec<ArrayD<F>>,
    pub v: Vec<ArrayD<F>>,
    pub t: u64,
}

impl<F: Scalar> AdamState<F> {
    pub fn for_network(net: &mut Network<F>) -> Self {
        let mut m = Vec::new();
        net.visit_params(&mut |p| m.push(ArrayD::zeros(p.value.raw_dim())));
        let v = m.clone();
        AdamState { m, v, t: 0 }
    }
}

pub fn adam_step<F: Scalar>(
    net: &mut Network<F>,
    state: &mut AdamState<F>,
    cfg: &OptimizerConfig,
    lr: f64,
) {
    state.t += 1;
    let b1 = F::of_f64(cfg.beta1);
    let b2 = F::of_f64(cfg.beta2);
    let eps = F::of_f64(cfg.epsilon);
    let one = F::one();
    let bc1 = F::of_f64(1.0 - cfg.beta1.powi(state.t as i32));
    let bc2 = F::of_f64(1.0 - cfg.beta2.powi(state.t as i32));
    let lr = F::of_f64(lr);

    let mut idx = 0;
    let (ms, vs) = (&mut state.m, &mut state.v);
    net.visit_params(&mut |p| {
        let m = &mut ms[idx];
        let v = &mut vs[idx];
        ndarray::Zip::from(&mut p.value)
            .and(&p.grad)
            .and(m)
            .and(v)
            .for_each(|val, &g, m, v| {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *val = *val - lr * m_hat / (v_hat.sqrt() + eps);
            });
        idx += 1;
    });
}
