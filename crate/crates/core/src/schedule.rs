//! Learning-rate schedule: constant, then linear decay to zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub constant_epochs: usize,
    pub total_epochs: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            constant_epochs: 100,
            total_epochs: 200,
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.total_epochs == 0 {
            return Err(Error::config("schedule.total_epochs", "must be positive"));
        }
        if self.constant_epochs > self.total_epochs {
            return Err(Error::config(
                "schedule.constant_epochs",
                "must not exceed total_epochs",
            ));
        }
        Ok(())
    }
}

/// Learning rate for `epoch`: `base_lr` through `constant_epochs`, then a
/// linear ramp hitting zero at `total_epochs`.
pub fn lr_at(schedule: ScheduleConfig, base_lr: f64, epoch: usize) -> Result<f64> {
    if epoch >= schedule.total_epochs {
        return Err(Error::Argument(format!(
            "epoch {epoch} out of range (total_epochs {})",
            schedule.total_epochs
        )));
    }
    if epoch < schedule.constant_epochs {
        return Ok(base_lr);
    }
    let span = (schedule.total_epochs - schedule.constant_epochs) as f64;
    Ok(base_lr * (schedule.total_epochs - epoch) as f64 / span)
}
