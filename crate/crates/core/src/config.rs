//! Run configuration: everything needed for a deterministic training run.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::losses::GanMode;
use crate::models::{DiscriminatorSpec, GeneratorSpec};
use crate::replay::DEFAULT_POOL_CAPACITY;
use crate::schedule::ScheduleConfig;

#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            learning_rate: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::config("optimizer.learning_rate", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return Err(Error::config("optimizer.beta1", "must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::config("optimizer.beta2", "must lie in [0, 1)"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::config("optimizer.epsilon", "must be positive"));
        }
        Ok(())
    }
}

/// Named dataset presets carrying the published epoch schedules.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Maps,
    Vangogh2photo,
    Summer2winter,
}

impl Preset {
    pub fn schedule(self) -> ScheduleConfig {
        match self {
            Preset::Maps => ScheduleConfig {
                constant_epochs: 150,
                total_epochs: 315,
            },
            Preset::Vangogh2photo => ScheduleConfig {
                constant_epochs: 150,
                total_epochs: 230,
            },
            Preset::Summer2winter => ScheduleConfig {
                constant_epochs: 120,
                total_epochs: 230,
            },
        }
    }
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub generator: GeneratorSpec,
    pub discriminator: DiscriminatorSpec,
    pub optimizer: OptimizerConfig,
    pub lambda_cyc: f64,
    pub gan_mode: GanMode,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Explicit schedule; when absent the preset (or the fallback default)
    /// supplies one. An explicit schedule wins over the preset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    pub seed: u64,
    /// Checkpoint every this many epochs (a final checkpoint is always written).
    pub checkpoint_every: usize,
    pub image_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            generator: GeneratorSpec::default(),
            discriminator: DiscriminatorSpec::default(),
            optimizer: OptimizerConfig::default(),
            lambda_cyc: 10.0,
            gan_mode: GanMode::Lsgan,
            buffer_capacity: DEFAULT_POOL_CAPACITY,
            batch_size: 1,
            schedule: None,
            preset: None,
            seed: 0,
            checkpoint_every: 10,
            image_size: 256,
        }
    }
}

impl TrainConfig {
    /// Schedule after preset expansion.
    pub fn effective_schedule(&self) -> ScheduleConfig {
        self.schedule
            .or_else(|| self.preset.map(Preset::schedule))
            .unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.discriminator.validate()?;
        self.optimizer.validate()?;
        if self.lambda_cyc < 0.0 {
            return Err(Error::config("lambda_cyc", "must be non-negative"));
        }
        if self.batch_size != 1 {
            return Err(Error::config(
                "batch_size",
                "must be 1 (instance-norm regime)",
            ));
        }
        self.effective_schedule().validate()?;
        if self.checkpoint_every == 0 {
            return Err(Error::config("checkpoint_every", "must be positive"));
        }
        let down = 1usize << (self.generator.encoder_channels.len() - 1);
        if self.image_size == 0 || self.image_size % down != 0 {
            return Err(Error::config(
                "image_size",
                format!("must be a positive multiple of {down}"),
            ));
        }
        Ok(())
    }

    /// Stable hash of the full config, stored in checkpoints so a resume
    /// with a different config is rejected.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        format!("{digest:x}")
    }
}
