//! One-step evaluation: train a small model, predict a held-out maneuver
//! from ground-truth history, and print the error metrics table.
//!
//! ```sh
//! cargo run --release --example evaluate_model
//! ```

use vemo::data::{make_windows, split_dataset};
use vemo::eval::one_step_eval;
use vemo::nn::{ArchConfig, Checkpoint};
use vemo::signal::{ScalingTable, SosFilter};
use vemo::synth::{build_training_script, simulate, SingleTrackParams};
use vemo::train::{fit, TrainConfig};

fn main() -> vemo::Result<()> {
    let vehicle = SingleTrackParams::default();
    let fs = 100.0;
    let cutoff = 5.0;
    let k = 50;
    let scaling = ScalingTable::default();
    let filter = SosFilter::butterworth_lowpass(8, cutoff, fs)?;

    let train_run = simulate(
        &vehicle,
        &build_training_script(7, 60.0)?,
        fs,
        60.0,
        "train",
    )?;
    let test_run = simulate(&vehicle, &build_training_script(99, 35.0)?, fs, 35.0, "test")?;

    let ds = make_windows(&train_run.filtered(&filter)?, k, &scaling)?;
    let (train, val) = split_dataset(&ds, 0.8, 0.2)?;
    let test = make_windows(&test_run.filtered(&filter)?, k, &scaling)?;

    let arch = ArchConfig {
        encoder_widths: vec![16, 16],
        branch_hidden: vec![8],
    };
    let cfg = TrainConfig {
        epochs: 10,
        patience: 10,
        seed: 1,
        ..Default::default()
    };
    println!("training...");
    let (params, log) = fit(&train, &val, &cfg, &arch)?;
    println!("best validation MAE {:.5}", log.best_val_mae().unwrap());

    let ck = Checkpoint {
        params,
        window_len: k,
        scaling,
        training_cutoff_hz: cutoff,
    };
    let report = one_step_eval(&ck, &test)?;
    let mut out = Vec::new();
    report.write_summary(&mut out)?;
    print!("{}", String::from_utf8_lossy(&out));

    // The per-window relative-error series backs the summary statistics.
    for c in &report.channels {
        let above_mean = c
            .rel_series
            .iter()
            .filter(|&&v| v > c.mean_rel)
            .count() as f64
            / c.rel_series.len() as f64
            * 100.0;
        println!(
            "{:<9} {:.1}% of windows above the mean (heavy-tailed errors)",
            c.name, above_mean
        );
    }
    Ok(())
}
