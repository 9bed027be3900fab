//! Alternating optimization: a joint generator update, then both
//! discriminator updates against replay-buffered fakes.

use std::path::Path;

use ndarray::{Array4, Axis};

use crate::checkpoint::{
    save_checkpoint, CheckpointState, CHECKPOINT_FORMAT_VERSION, CHECKPOINT_MAGIC,
};
use crate::config::TrainConfig;
use crate::data::{iterate_epoch, Sample, UnpairedDataset};
use crate::error::{Error, Result};
use crate::losses::{
    adversarial_discriminator_loss, adversarial_discriminator_loss_grads,
    adversarial_generator_loss, adversarial_generator_loss_grad, cycle_loss, cycle_loss_grad,
    full_objective, LossReport,
};
use crate::models::{build_discriminator, build_generator, Network, NetworkRole};
use crate::optim::{adam_step, AdamState};
use crate::replay::ReplayBuffer;
use crate::scalar::Scalar;
use crate::schedule::lr_at;

/// Receives one `LossReport` per training iteration.
pub trait ReportSink {
    fn report(&mut self, report: &LossReport) -> Result<()>;
}

impl ReportSink for Vec<LossReport> {
    fn report(&mut self, report: &LossReport) -> Result<()> {
        self.push(*report);
        Ok(())
    }
}

/// Deterministic stream splitting (splitmix64 finalizer) so the networks,
/// buffers, and epoch shuffles each get their own seed.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_finite<F: Scalar>(component: &str, value: F) -> Result<F> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::training(
            component,
            format!("non-finite loss {value}"),
        ))
    }
}

/// Generator-side loss components of one iteration.
#[derive(Clone, Copy, Debug)]
pub struct GeneratorLosses {
    pub g_xy_adv: f64,
    pub g_yx_adv: f64,
    pub cycle_forward: f64,
    pub cycle_backward: f64,
    pub total_generator: f64,
}

pub struct Trainer<F: Scalar> {
    pub cfg: TrainConfig,
    pub g: Network<F>,
    pub f: Network<F>,
    pub d_x: Network<F>,
    pub d_y: Network<F>,
    pub opt_g: AdamState<F>,
    pub opt_f: AdamState<F>,
    pub opt_d_x: AdamState<F>,
    pub opt_d_y: AdamState<F>,
    pub buffer_x: ReplayBuffer<F>,
    pub buffer_y: ReplayBuffer<F>,
    /// Completed epochs.
    pub epoch: usize,
    /// Completed iterations across all epochs.
    pub iteration: usize,
    lr: f64,
}

impl<F: Scalar> Trainer<F> {
    pub fn new(cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let seed = cfg.seed;
        let mut g = build_generator(&cfg.generator, derive_seed(seed, 1), NetworkRole::GXy)?;
        let mut f = build_generator(&cfg.generator, derive_seed(seed, 2), NetworkRole::FYx)?;
        let mut d_x =
            build_discriminator(&cfg.discriminator, derive_seed(seed, 3), NetworkRole::DX)?;
        let mut d_y =
            build_discriminator(&cfg.discriminator, derive_seed(seed, 4), NetworkRole::DY)?;
        let opt_g = AdamState::for_network(&mut g);
        let opt_f = AdamState::for_network(&mut f);
        let opt_d_x = AdamState::for_network(&mut d_x);
        let opt_d_y = AdamState::for_network(&mut d_y);
        let buffer_x = ReplayBuffer::new(cfg.buffer_capacity, derive_seed(seed, 5));
        let buffer_y = ReplayBuffer::new(cfg.buffer_capacity, derive_seed(seed, 6));
        let lr = cfg.optimizer.learning_rate;
        Ok(Trainer {
            cfg,
            g,
            f,
            d_x,
            d_y,
            opt_g,
            opt_f,
            opt_d_x,
            opt_d_y,
            buffer_x,
            buffer_y,
            epoch: 0,
            iteration: 0,
            lr,
        })
    }

    pub fn from_checkpoint(state: CheckpointState<F>) -> Result<Self> {
        let mut trainer = Trainer::new(state.config.clone())?;
        trainer.g.load_state(&state.g_params)?;
        trainer.f.load_state(&state.f_params)?;
        trainer.d_x.load_state(&state.d_x_params)?;
        trainer.d_y.load_state(&state.d_y_params)?;
        trainer.opt_g = state.opt_g;
        trainer.opt_f = state.opt_f;
        trainer.opt_d_x = state.opt_d_x;
        trainer.opt_d_y = state.opt_d_y;
        trainer.buffer_x = ReplayBuffer::restore(state.buffer_x);
        trainer.buffer_y = ReplayBuffer::restore(state.buffer_y);
        trainer.epoch = state.epoch;
        trainer.iteration = state.iteration;
        Ok(trainer)
    }

    pub fn checkpoint(&mut self) -> CheckpointState<F> {
        CheckpointState {
            magic: CHECKPOINT_MAGIC.to_string(),
            format_version: CHECKPOINT_FORMAT_VERSION,
            fingerprint: self.cfg.fingerprint(),
            config: self.cfg.clone(),
            epoch: self.epoch,
            iteration: self.iteration,
            g_params: self.g.state(),
            f_params: self.f.state(),
            d_x_params: self.d_x.state(),
            d_y_params: self.d_y.state(),
            opt_g: clone_state(&self.opt_g),
            opt_f: clone_state(&self.opt_f),
            opt_d_x: clone_state(&self.opt_d_x),
            opt_d_y: clone_state(&self.opt_d_y),
            buffer_x: self.buffer_x.snapshot(),
            buffer_y: self.buffer_y.snapshot(),
        }
    }

    /// One joint update of both generators on one unpaired sample.
    /// Discriminators are read (for the adversarial terms) but not updated.
    /// Returns the loss components and the two fakes for the discriminator
    /// phase.
    pub fn generator_step(
        &mut self,
        sample: &Sample<F>,
    ) -> Result<(GeneratorLosses, Array4<F>, Array4<F>)> {
        let lambda = F::of_f64(self.cfg.lambda_cyc);
        let mode = self.cfg.gan_mode;
        let x = batch_of(sample.image_a.clone());
        let y = batch_of(sample.image_b.clone());

        self.g.zero_grads();
        self.f.zero_grads();

        // Forward passes. Each network is run twice; backward pops the
        // cached passes in reverse order.
        let fake_y = self.g.forward(&x, true)?;
        let rec_x = self.f.forward(&fake_y, true)?;
        let fake_x = self.f.forward(&y, true)?;
        let rec_y = self.g.forward(&fake_x, true)?;
        let scores_dy = self.d_y.forward(&fake_y, true)?;
        let scores_dx = self.d_x.forward(&fake_x, true)?;

        let g_xy_adv = check_finite("g_xy_adv", adversarial_generator_loss(&scores_dy, mode)?)?;
        let g_yx_adv = check_finite("g_yx_adv", adversarial_generator_loss(&scores_dx, mode)?)?;
        let cycle_forward = check_finite("cycle_forward", cycle_loss(&x, &rec_x)?)?;
        let cycle_backward = check_finite("cycle_backward", cycle_loss(&y, &rec_y)?)?;
        // Bookkeeping at f64 so the Eq. 4 identity holds in the reports.
        let total = full_objective(
            g_xy_adv.as_f64(),
            g_yx_adv.as_f64(),
            cycle_forward.as_f64(),
            cycle_backward.as_f64(),
            self.cfg.lambda_cyc,
        )?;
        check_finite("total_generator", F::of_f64(total))?;

        // Backward. The discriminators only relay gradients onto the fakes;
        // their own parameter updates happen in the discriminator phase.
        let grad_fake_y_adv = self
            .d_y
            .backward(&adversarial_generator_loss_grad(&scores_dy, mode)?);
        let grad_fake_x_adv = self
            .d_x
            .backward(&adversarial_generator_loss_grad(&scores_dx, mode)?);

        let grad_rec_y = cycle_loss_grad(&y, &rec_y)? * lambda;
        let grad_fake_x_cyc = self.g.backward(&grad_rec_y);
        let grad_fake_x = grad_fake_x_adv + grad_fake_x_cyc;
        let _ = self.f.backward(&grad_fake_x);

        let grad_rec_x = cycle_loss_grad(&x, &rec_x)? * lambda;
        let grad_fake_y_cyc = self.f.backward(&grad_rec_x);
        let grad_fake_y = grad_fake_y_adv + grad_fake_y_cyc;
        let _ = self.g.backward(&grad_fake_y);

        adam_step(&mut self.g, &mut self.opt_g, &self.cfg.optimizer, self.lr);
        adam_step(&mut self.f, &mut self.opt_f, &self.cfg.optimizer, self.lr);

        let losses = GeneratorLosses {
            g_xy_adv: g_xy_adv.as_f64(),
            g_yx_adv: g_yx_adv.as_f64(),
            cycle_forward: cycle_forward.as_f64(),
            cycle_backward: cycle_backward.as_f64(),
            total_generator: total,
        };
        Ok((losses, fake_x, fake_y))
    }

    /// One update of each discriminator against the real sample and a
    /// replay-buffered fake. Generators are untouched.
    pub fn discriminator_step(
        &mut self,
        sample: &Sample<F>,
        fake_x: &Array4<F>,
        fake_y: &Array4<F>,
    ) -> Result<(f64, f64)> {
        let mode = self.cfg.gan_mode;
        let x = batch_of(sample.image_a.clone());
        let y = batch_of(sample.image_b.clone());
        let buffered_x = self.buffer_x.query(fake_x)?;
        let buffered_y = self.buffer_y.query(fake_y)?;

        let d_x_total = update_discriminator(
            &mut self.d_x,
            &mut self.opt_d_x,
            &self.cfg,
            self.lr,
            "d_x_total",
            &x,
            &buffered_x,
            mode,
        )?;
        let d_y_total = update_discriminator(
            &mut self.d_y,
            &mut self.opt_d_y,
            &self.cfg,
            self.lr,
            "d_y_total",
            &y,
            &buffered_y,
            mode,
        )?;
        Ok((d_x_total, d_y_total))
    }

    /// Run the remaining epochs, emitting one report per iteration and a
    /// checkpoint every `checkpoint_every` epochs (plus a final one).
    pub fn train(
        &mut self,
        dataset: &UnpairedDataset,
        sink: &mut dyn ReportSink,
        checkpoint_path: Option<&Path>,
    ) -> Result<()> {
        let schedule = self.cfg.effective_schedule();
        let base_lr = self.cfg.optimizer.learning_rate;
        while self.epoch < schedule.total_epochs {
            self.lr = lr_at(schedule, base_lr, self.epoch)?;
            let samples = iterate_epoch::<F>(dataset, derive_seed(self.cfg.seed, 1000 + self.epoch as u64));
            for sample in samples {
                let sample = sample?;
                let (gen, fake_x, fake_y) = self.generator_step(&sample)?;
                let (d_x_total, d_y_total) =
                    self.discriminator_step(&sample, &fake_x, &fake_y)?;
                let report = LossReport {
                    epoch: self.epoch,
                    iteration: self.iteration,
                    g_xy_adv: gen.g_xy_adv,
                    g_yx_adv: gen.g_yx_adv,
                    cycle_forward: gen.cycle_forward,
                    cycle_backward: gen.cycle_backward,
                    total_generator: gen.total_generator,
                    d_x_total,
                    d_y_total,
                };
                sink.report(&report)?;
                self.iteration += 1;
            }
            self.epoch += 1;
            let due = self.epoch % self.cfg.checkpoint_every == 0
                || self.epoch == schedule.total_epochs;
            if due {
                if let Some(path) = checkpoint_path {
                    let state = self.checkpoint();
                    save_checkpoint(&state, path)?;
                }
            }
        }
        Ok(())
    }
}

fn clone_state<F: Scalar>(s: &AdamState<F>) -> AdamState<F> {
    AdamState {
        m: s.m.clone(),
        v: s.v.clone(),
        t: s.t,
    }
}

fn batch_of<F: Scalar>(img: ndarray::Array3<F>) -> Array4<F> {
    img.insert_axis(Axis(0))
}

#[allow(clippy::too_many_arguments)]
fn update_discriminator<F: Scalar>(
    d: &mut Network<F>,
    opt: &mut AdamState<F>,
    cfg: &TrainConfig,
    lr: f64,
    component: &str,
    real: &Array4<F>,
    fake: &Array4<F>,
    mode: crate::losses::GanMode,
) -> Result<f64> {
    d.zero_grads();
    let scores_real = d.forward(real, true)?;
    let scores_fake = d.forward(fake, true)?;
    let loss = check_finite(
        component,
        adversarial_discriminator_loss(&scores_real, &scores_fake, mode)?,
    )?;
    let (grad_real, grad_fake) =
        adversarial_discriminator_loss_grads(&scores_real, &scores_fake, mode)?;
    // LIFO: the fake pass was cached last.
    let _ = d.backward(&grad_fake);
    let _ = d.backward(&grad_real);
    adam_step(d, opt, &cfg.optimizer, lr);
    Ok(loss.as_f64())
}

/// Convenience wrapper: build a fresh trainer from `cfg`, run it to
/// completion, and return the final checkpoint state.
pub fn train<F: Scalar>(
    cfg: TrainConfig,
    dataset: &UnpairedDataset,
    sink: &mut dyn ReportSink,
    checkpoint_path: Option<&Path>,
) -> Result<CheckpointState<F>> {
    let mut trainer = Trainer::new(cfg)?;
    trainer.train(dataset, sink, checkpoint_path)?;
    Ok(trainer.checkpoint())
}
