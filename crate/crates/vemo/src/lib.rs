//! Data-driven one-step vehicle dynamics modelling.
//!
//! The crate learns a vehicle's discrete state-transition function from
//! telemetry: given the last `k` samples of vehicle states (longitudinal and
//! lateral acceleration, yaw rate, longitudinal velocity) and driver controls
//! (throttle, brake, steering, gear), a branched GRU encoder-decoder predicts
//! the next state. Everything needed to reproduce the pipeline end to end is
//! included: Butterworth preprocessing, dataset windowing, a synthetic
//! single-track telemetry generator, exact backpropagation through time,
//! Adam training, and the noise-robustness evaluation protocol.
//!
//! Modules:
//! - [`signal`]: filter design/application, Welch PSD, channel scaling.
//! - [`data`]: telemetry CSV ingestion, run validation, sliding-window
//!   tensorization, dataset caches.
//! - [`synth`]: nonlinear single-track simulator and maneuver scripting.
//! - [`nn`]: GRU / dense layers with exact forward and backward passes, the
//!   shared-encoder four-branch model, checkpoints.
//! - [`train`]: Adam over MAE with deterministic mini-batching.
//! - [`eval`]: one-step prediction metrics, histograms, PSD comparison and
//!   cross-cutoff noise sweeps.
//! - [`cli`]: the `generate` / `preprocess` / `train` / `eval` / `sweep`
//!   operator surface.

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod nn;
pub mod signal;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
