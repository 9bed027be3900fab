//! Unpaired image-to-image translation with cycle-consistent adversarial
//! networks: two generators, two patch discriminators, adversarial + cycle
//! losses, a replay buffer, learning-rate scheduling, dataset ingestion,
//! checkpointing, and a deterministic training loop.
//!
//! The math core is generic over the scalar type ([`Scalar`]); training
//! runs at `f32`, while the gradient-check tests instantiate the same code
//! at `f64`.

extern crate blas_src;

pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod losses;
pub mod models;
pub mod nn;
pub mod optim;
pub mod replay;
pub mod report;
pub mod scalar;
pub mod schedule;
pub mod trainer;

pub use config::{OptimizerConfig, Preset, TrainConfig};
pub use error::{Error, Result};
pub use losses::{GanMode, LossReport};
pub use models::{DiscriminatorSpec, GeneratorSpec, NetworkRole, NormKind};
pub use scalar::Scalar;
pub use schedule::ScheduleConfig;

/// The precision used for training and inference.
pub type TrainScalar = f32;
pub type Network = models::Network<TrainScalar>;
pub type Trainer = trainer::Trainer<TrainScalar>;
pub type CheckpointState = checkpoint::CheckpointState<TrainScalar>;
pub type ReplayBuffer = replay::ReplayBuffer<TrainScalar>;
pub type ImageTensor = ndarray::Array3<TrainScalar>;
pub type ImageBatch = ndarray::Array4<TrainScalar>;
