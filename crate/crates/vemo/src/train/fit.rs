//! The training loop.
//!
//! Deterministic by construction: seeded per-epoch shuffling, and every
//! floating-point reduction (batch gradients, epoch losses, validation MAE)
//! runs over fixed-size chunks merged in index order, so results are
//! bit-identical regardless of the rayon thread count.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::WindowedDataset;
use crate::nn::{vemo_backward, vemo_forward, ArchConfig, GradientSet, VemoParams};
use crate::train::{adam_step, TrainConfig, TrainState};
use crate::{Error, Result};

/// Windows per parallel work unit. Fixed (not derived from the thread count)
/// so reduction order never changes.
const GRAD_CHUNK: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mae: f64,
    pub val_mae: f64,
    /// Wall-clock seconds; diagnostic only, excluded from reproducibility
    /// guarantees.
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
}

impl TrainingLog {
    pub fn best_val_mae(&self) -> Option<f64> {
        self.epochs
            .iter()
            .map(|e| e.val_mae)
            .min_by(|a, b| a.total_cmp(b))
    }

    /// Character-separated table: epoch, train MAE, val MAE, wall time.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "epoch,train_mae,val_mae,wall_time_s")?;
        for e in &self.epochs {
            writeln!(w, "{},{},{},{}", e.epoch, e.train_mae, e.val_mae, e.wall_time_s)?;
        }
        Ok(())
    }
}

/// Mean MAE of a parameter set over a whole dataset, deterministic order.
pub fn dataset_mae(params: &VemoParams, ds: &WindowedDataset) -> Result<f64> {
    let indices: Vec<usize> = (0..ds.len()).collect();
    let partial: Vec<Result<f64>> = indices
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut acc = 0.0;
            for &i in chunk {
                let pred = vemo_forward(params, ds.window(i))?;
                let target = ds.target(i);
                acc += pred
                    .iter()
                    .zip(target)
                    .map(|(p, t)| (p - t).abs())
                    .sum::<f64>()
                    / 4.0;
            }
            Ok(acc)
        })
        .collect();
    let mut total = 0.0;
    for p in partial {
        total += p?;
    }
    Ok(total / ds.len() as f64)
}

/// Summed loss and gradients over a batch of window indices.
fn batch_gradients(
    params: &VemoParams,
    ds: &WindowedDataset,
    batch: &[usize],
) -> Result<(f64, GradientSet)> {
    let partial: Vec<Result<(f64, GradientSet)>> = batch
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut loss_sum = 0.0;
            let mut grads = GradientSet::zeros_like(params);
            for &i in chunk {
                let target: [f64; 4] = ds.target(i).try_into().expect("4-channel target");
                let (loss, g) = vemo_backward(params, ds.window(i), &target)?;
                loss_sum += loss;
                grads.add_assign(&g);
            }
            Ok((loss_sum, grads))
        })
        .collect();

    let mut loss_sum = 0.0;
    let mut total = GradientSet::zeros_like(params);
    for p in partial {
        let (l, g) = p?;
        loss_sum += l;
        total.add_assign(&g);
    }
    Ok((loss_sum, total))
}

/// Train on the given splits; returns the best-validation parameters and the
/// per-epoch log. Fully deterministic for a fixed `(seed, config, dataset)`.
pub fn fit(
    train: &WindowedDataset,
    val: &WindowedDataset,
    cfg: &TrainConfig,
    arch: &ArchConfig,
) -> Result<(VemoParams, TrainingLog)> {
    cfg.validate()?;
    arch.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Config(format!(
            "both splits must be non-empty (train {}, validation {})",
            train.len(),
            val.len()
        )));
    }
    if train.window_len() != val.window_len() {
        return Err(Error::Config(format!(
            "window length differs between splits: {} vs {}",
            train.window_len(),
            val.window_len()
        )));
    }

    let mut state = TrainState::new(VemoParams::init(arch, cfg.seed)?);
    let mut log = TrainingLog::default();
    let mut best: Option<(f64, VemoParams)> = None;
    let mut epochs_since_best = 0usize;

    let mut indices: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        // Fresh permutation each epoch, derived from (seed, epoch) only.
        let mut rng =
            ChaCha8Rng::seed_from_u64(cfg.seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        indices.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        for batch in indices.chunks(cfg.batch_size) {
            let (batch_loss, mut grads) = batch_gradients(&state.params, train, batch)?;
            loss_sum += batch_loss;
            grads.scale(1.0 / batch.len() as f64);
            if let Some(clip) = cfg.grad_clip {
                let norm = grads.global_norm();
                if norm > clip {
                    grads.scale(clip / norm);
                }
            }
            adam_step(&mut state, &grads, cfg)?;
        }
        let train_mae = loss_sum / train.len() as f64;
        let val_mae = dataset_mae(&state.params, val)?;
        if !val_mae.is_finite() {
            return Err(Error::Numeric(format!(
                "validation MAE became non-finite at epoch {epoch} (train MAE {train_mae}); \
                 last logged epochs: {:?}",
                log.epochs.iter().rev().take(3).collect::<Vec<_>>()
            )));
        }

        log.epochs.push(EpochRecord {
            epoch,
            train_mae,
            val_mae,
            wall_time_s: started.elapsed().as_secs_f64(),
        });

        let improved = best.as_ref().map_or(true, |(b, _)| val_mae < *b);
        if improved {
            best = Some((val_mae, state.params.clone()));
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if epochs_since_best >= cfg.patience {
                break;
            }
        }
    }

    let (_, best_params) = best.expect("at least one epoch ran");
    Ok((best_params, log))
}
