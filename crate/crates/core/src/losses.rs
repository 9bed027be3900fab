//! Adversarial and cycle-consistency losses.
//!
//! Each loss comes with its analytic gradient so the trainer can seed
//! backward passes; the gradient functions are exercised against finite
//! differences in the tests.

use ndarray::{Array, Dimension};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GanMode {
    /// Target-value regression with squared error (the form trained).
    Lsgan,
    /// Log-sigmoid cross-entropy (the objective as written).
    Vanilla,
}

/// One training iteration's loss components.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub epoch: usize,
    pub iteration: usize,
    pub g_xy_adv: f64,
    pub g_yx_adv: f64,
    pub cycle_forward: f64,
    pub cycle_backward: f64,
    pub total_generator: f64,
    pub d_x_total: f64,
    pub d_y_total: f64,
}

impl LossReport {
    pub const CSV_HEADER: &'static str =
        "epoch,iteration,g_xy_adv,g_yx_adv,cycle_forward,cycle_backward,total_generator,d_x_total,d_y_total";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.epoch,
            self.iteration,
            self.g_xy_adv,
            self.g_yx_adv,
            self.cycle_forward,
            self.cycle_backward,
            self.total_generator,
            self.d_x_total,
            self.d_y_total
        )
    }
}

fn sigmoid<F: Scalar>(v: F) -> F {
    F::one() / (F::one() + (-v).exp())
}

fn mean_count<F: Scalar, D: Dimension>(a: &Array<F, D>, what: &str) -> Result<F> {
    if a.is_empty() {
        return Err(Error::Argument(format!("{what}: empty score map")));
    }
    Ok(F::of_f64(a.len() as f64))
}

/// Generator-side adversarial loss on discriminator scores for fakes.
/// lsgan: mean((s - 1)^2); vanilla: mean(-log sigmoid(s)).
pub fn adversarial_generator_loss<F: Scalar, D: Dimension>(
    scores_on_fake: &Array<F, D>,
    mode: GanMode,
) -> Result<F> {
    let n = mean_count(scores_on_fake, "adversarial_generator_loss")?;
    let total = match mode {
        GanMode::Lsgan => scores_on_fake.fold(F::zero(), |acc, &s| {
            let d = s - F::one();
            acc + d * d
        }),
        GanMode::Vanilla => scores_on_fake
            .fold(F::zero(), |acc, &s| acc - sigmoid(s).ln()),
    };
    Ok(total / n)
}

pub fn adversarial_generator_loss_grad<F: Scalar, D: Dimension>(
    scores_on_fake: &Array<F, D>,
    mode: GanMode,
) -> Result<Array<F, D>> {
    let n = mean_count(scores_on_fake, "adversarial_generator_loss")?;
    let two = F::of_f64(2.0);
    Ok(match mode {
        GanMode::Lsgan => scores_on_fake.mapv(|s| two * (s - F::one()) / n),
        GanMode::Vanilla => scores_on_fake.mapv(|s| (sigmoid(s) - F::one()) / n),
    })
}

/// Discriminator loss over real and (replay-buffered) fake scores, halved
/// by convention to slow the discriminator relative to the generators.
pub fn adversarial_discriminator_loss<F: Scalar, D: Dimension>(
    scores_on_real: &Array<F, D>,
    scores_on_fake: &Array<F, D>,
    mode: GanMode,
) -> Result<F> {
    let nr = mean_count(scores_on_real, "adversarial_discriminator_loss(real)")?;
    let nf = mean_count(scores_on_fake, "adversarial_discriminator_loss(fake)")?;
    let half = F::of_f64(0.5);
    let (real_term, fake_term) = match mode {
        GanMode::Lsgan => (
            scores_on_real.fold(F::zero(), |acc, &s| {
                let d = s - F::one();
                acc + d * d
            }) / nr,
            scores_on_fake.fold(F::zero(), |acc, &s| acc + s * s) / nf,
        ),
        GanMode::Vanilla => (
            scores_on_real.fold(F::zero(), |acc, &s| acc - sigmoid(s).ln()) / nr,
            scores_on_fake
                .fold(F::zero(), |acc, &s| acc - (F::one() - sigmoid(s)).ln())
                / nf,
        ),
    };
    Ok(half * (real_term + fake_term))
}

/// Gradients of `adversarial_discriminator_loss` with respect to the real
/// and fake score maps, in that order.
pub fn adversarial_discriminator_loss_grads<F: Scalar, D: Dimension>(
    scores_on_real: &Array<F, D>,
    scores_on_fake: &Array<F, D>,
    mode: GanMode,
) -> Result<(Array<F, D>, Array<F, D>)> {
    let nr = mean_count(scores_on_real, "adversarial_discriminator_loss(real)")?;
    let nf = mean_count(scores_on_fake, "adversarial_discriminator_loss(fake)")?;
    let half = F::of_f64(0.5);
    Ok(match mode {
        GanMode::Lsgan => (
            scores_on_real.mapv(|s| (s - F::one()) / nr),
            scores_on_fake.mapv(|s| s / nf),
        ),
        GanMode::Vanilla => (
            scores_on_real.mapv(|s| half * (sigmoid(s) - F::one()) / nr),
            scores_on_fake.mapv(|s| half * sigmoid(s) / nf),
        ),
    })
}

/// L1 cycle-consistency loss: mean absolute elementwise difference.
pub fn cycle_loss<F: Scalar, D: Dimension>(
    original: &Array<F, D>,
    reconstructed: &Array<F, D>,
) -> Result<F> {
    if original.shape() != reconstructed.shape() {
        return Err(Error::shape(
            format!("{:?}", original.shape()),
            format!("{:?}", reconstructed.shape()),
        ));
    }
    let n = F::of_f64(original.len() as f64);
    let mut total = F::zero();
    ndarray::Zip::from(original)
        .and(reconstructed)
        .for_each(|&a, &b| total += (a - b).abs());
    Ok(total / n)
}

/// Gradient of `cycle_loss` with respect to `reconstructed`.
pub fn cycle_loss_grad<F: Scalar, D: Dimension>(
    original: &Array<F, D>,
    reconstructed: &Array<F, D>,
) -> Result<Array<F, D>> {
    if original.shape() != reconstructed.shape() {
        return Err(Error::shape(
            format!("{:?}", original.shape()),
            format!("{:?}", reconstructed.shape()),
        ));
    }
    let n = F::of_f64(original.len() as f64);
    let mut g = reconstructed.clone();
    ndarray::Zip::from(&mut g).and(original).for_each(|r, &o| {
        *r = if *r > o {
            F::one() / n
        } else if *r < o {
            -F::one() / n
        } else {
            F::zero()
        };
    });
    Ok(g)
}

/// Full objective: both adversarial terms plus lambda times both cycle terms.
pub fn full_objective<F: Scalar>(
    g_xy_adv: F,
    g_yx_adv: F,
    cycle_forward: F,
    cycle_backward: F,
    lambda_cyc: F,
) -> Result<F> {
    if lambda_cyc < F::zero() {
        return Err(Error::config("lambda_cyc", "must be non-negative"));
    }
    Ok(g_xy_adv + g_yx_adv + lambda_cyc * (cycle_forward + cycle_backward))
}
