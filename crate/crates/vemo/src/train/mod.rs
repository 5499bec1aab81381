//! Optimization: Adam over MAE with deterministic, seeded mini-batching.

mod adam;
mod config;
mod fit;

pub use adam::{adam_step, TrainState};
pub use config::TrainConfig;
pub use fit::{fit, EpochRecord, TrainingLog};
