//! Versioned, self-describing checkpoint container.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use ndarray::ArrayD;
use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::error::{Error, Result};
use crate::optim::AdamState;
use crate::replay::BufferSnapshot;
use crate::scalar::Scalar;

pub const CHECKPOINT_MAGIC: &str = "cyclegan-checkpoint";
pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct CheckpointState<F: Scalar> {
    pub magic: String,
    pub format_version: u32,
    /// Stored as JSON: the config uses `skip_serializing_if`, which a
    /// positional format like bincode cannot round-trip.
    #[serde(with = "config_json")]
    pub config: TrainConfig,
    pub fingerprint: String,
    /// Completed epochs.
    pub epoch: usize,
    /// Completed iterations (across all epochs).
    pub iteration: usize,
    pub g_params: Vec<ArrayD<F>>,
    pub f_params: Vec<ArrayD<F>>,
    pub d_x_params: Vec<ArrayD<F>>,
    pub d_y_params: Vec<ArrayD<F>>,
    pub opt_g: AdamState<F>,
    pub opt_f: AdamState<F>,
    pub opt_d_x: AdamState<F>,
    pub opt_d_y: AdamState<F>,
    pub buffer_x: BufferSnapshot<F>,
    pub buffer_y: BufferSnapshot<F>,
}

mod config_json {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::config::TrainConfig;

    pub fn serialize<S: Serializer>(cfg: &TrainConfig, s: S) -> Result<S::Ok, S::Error> {
        serde_json::to_string(cfg)
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<TrainConfig, D::Error> {
        let text = String::deserialize(d)?;
        serde_json::from_str(&text).map_err(serde::de::Error::custom)
    }
}

pub fn save_checkpoint<F: Scalar>(state: &CheckpointState<F>, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    bincode::serialize_into(BufWriter::new(file), state)
        .map_err(|e| Error::CheckpointCorrupt(format!("write {}: {e}", path.display())))
}

pub fn load_checkpoint<F: Scalar>(path: &Path) -> Result<CheckpointState<F>> {
    let file = File::open(path)?;
    let state: CheckpointState<F> = bincode::deserialize_from(BufReader::new(file))
        .map_err(|e| Error::CheckpointCorrupt(format!("{}: {e}", path.display())))?;
    if state.magic != CHECKPOINT_MAGIC {
        return Err(Error::CheckpointCorrupt(format!(
            "{}: not a checkpoint file",
            path.display()
        )));
    }
    if state.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(Error::CheckpointCorrupt(format!(
            "{}: unsupported format version {}",
            path.display(),
            state.format_version
        )));
    }
    Ok(state)
}

impl<F: Scalar> CheckpointState<F> {
    /// Reject resuming under a config other than the one that produced
    /// this checkpoint.
    pub fn verify_config(&self, cfg: &TrainConfig) -> Result<()> {
        if self.fingerprint != cfg.fingerprint() {
            return Err(Error::CheckpointConfigMismatch(
                "checkpoint was produced by a different configuration".into(),
            ));
        }
        Ok(())
    }
}
