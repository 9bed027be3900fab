//! Bounded pool of recently generated images fed to the discriminators.

use ndarray::{Array3, Array4, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_POOL_CAPACITY: usize = 50;

pub struct ReplayBuffer<F: Scalar> {
    capacity: usize,
    pool: Vec<Array3<F>>,
    rng: ChaCha20Rng,
}

/// Serializable state of a `ReplayBuffer`; restoring reproduces identical
/// future query outputs.
#[derive(Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct BufferSnapshot<F: Scalar> {
    pub capacity: usize,
    pub pool: Vec<Array3<F>>,
    pub rng: ChaCha20Rng,
}

impl<F: Scalar> ReplayBuffer<F> {
    pub fn new(capacity: usize, seed: u64) -> Self {
        ReplayBuffer {
            capacity,
            pool: Vec::with_capacity(capacity),
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn len(&self) -> usize {
        self.pool.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pool.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Offer a batch of freshly generated images; returns the batch the
    /// discriminator should see. While the pool is filling, every image is
    /// stored and passed through. Once full, each image either swaps with a
    /// random pooled image (probability 0.5) or passes through unstored.
    pub fn query(&mut self, fresh: &Array4<F>) -> Result<Array4<F>> {
        if self.capacity == 0 {
            return Ok(fresh.clone());
        }
        if let Some(pooled) = self.pool.first() {
            let (_, c, h, w) = fresh.dim();
            if pooled.dim() != (c, h, w) {
                return Err(Error::Argument(format!(
                    "replay buffer image shape {:?} does not match pooled {:?}",
                    (c, h, w),
                    pooled.dim()
                )));
            }
        }
        let mut out = fresh.clone();
        for i in 0..fresh.dim().0 {
            let img = fresh.index_axis(Axis(0), i).to_owned();
            if self.pool.len() < self.capacity {
                self.pool.push(img);
            } else if self.rng.gen_bool(0.5) {
                let slot = self.rng.gen_range(0..self.pool.len());
                let stale = std::mem::replace(&mut self.pool[slot], img);
                out.index_axis_mut(Axis(0), i).assign(&stale);
            }
        }
        Ok(out)
    }

    pub fn snapshot(&self) -> BufferSnapshot<F> {
        BufferSnapshot {
            capacity: self.capacity,
            pool: self.pool.clone(),
            rng: self.rng.clone(),
        }
    }

    pub fn restore(snapshot: BufferSnapshot<F>) -> Self {
        ReplayBuffer {
            capacity: snapshot.capacity,
            pool: snapshot.pool,
            rng: snapshot.rng,
        }
    }
}
