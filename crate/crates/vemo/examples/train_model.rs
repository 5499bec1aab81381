//! Train a small network on synthetic telemetry and save a checkpoint.
//!
//! Deliberately desk-sized (reduced widths, few epochs) so it finishes in
//! well under a minute; the `vemo train` subcommand runs the full-size
//! configuration.
//!
//! ```sh
//! cargo run --release --example train_model
//! ```

use vemo::data::{make_windows, split_dataset};
use vemo::nn::{load_checkpoint, save_checkpoint, ArchConfig, Checkpoint};
use vemo::signal::{ScalingTable, SosFilter};
use vemo::synth::{build_training_script, simulate, SingleTrackParams};
use vemo::train::{fit, TrainConfig};

fn main() -> vemo::Result<()> {
    let vehicle = SingleTrackParams::default();
    let fs = 100.0;
    let cutoff = 5.0;
    let k = 50;

    let script = build_training_script(7, 60.0)?;
    let run = simulate(&vehicle, &script, fs, 60.0, "train")?;
    let filter = SosFilter::butterworth_lowpass(8, cutoff, fs)?;
    let scaling = ScalingTable::default();
    let ds = make_windows(&run.filtered(&filter)?, k, &scaling)?;
    let (train, val) = split_dataset(&ds, 0.8, 0.2)?;

    let arch = ArchConfig {
        encoder_widths: vec![16, 16],
        branch_hidden: vec![8],
    };
    let cfg = TrainConfig {
        epochs: 8,
        patience: 8,
        seed: 1,
        ..Default::default()
    };
    println!("training on {} windows ({} validation)...", train.len(), val.len());
    let (params, log) = fit(&train, &val, &cfg, &arch)?;
    for e in &log.epochs {
        println!(
            "epoch {:>2}: train MAE {:.5}, val MAE {:.5} ({:.1} s)",
            e.epoch, e.train_mae, e.val_mae, e.wall_time_s
        );
    }

    let ck = Checkpoint {
        params,
        window_len: k,
        scaling,
        training_cutoff_hz: cutoff,
    };
    let path = std::env::temp_dir().join("vemo_demo.ck");
    save_checkpoint(&ck, &path)?;
    let back = load_checkpoint(&path)?;
    assert_eq!(ck, back);
    println!("checkpoint round trip bit-exact at {}", path.display());
    Ok(())
}
