//! Noise robustness: feed a model trained on 5 Hz-filtered data inputs
//! filtered at higher cutoffs and tabulate the degradation against the
//! training-regime benchmark.
//!
//! ```sh
//! cargo run --release --example noise_sweep
//! ```

use vemo::data::{make_windows, split_dataset};
use vemo::eval::noise_sweep;
use vemo::nn::{ArchConfig, Checkpoint};
use vemo::signal::{ScalingTable, SosFilter};
use vemo::synth::{build_training_script, simulate, SingleTrackParams};
use vemo::train::{fit, TrainConfig};

fn main() -> vemo::Result<()> {
    let vehicle = SingleTrackParams::default();
    let fs = 100.0;
    let training_cutoff = 5.0;
    let k = 50;
    let scaling = ScalingTable::default();

    let train_run = simulate(
        &vehicle,
        &build_training_script(7, 60.0)?,
        fs,
        60.0,
        "train",
    )?;
    let test_run = simulate(&vehicle, &build_training_script(99, 35.0)?, fs, 35.0, "test")?;

    let filter = SosFilter::butterworth_lowpass(8, training_cutoff, fs)?;
    let ds = make_windows(&train_run.filtered(&filter)?, k, &scaling)?;
    let (train, val) = split_dataset(&ds, 0.8, 0.2)?;

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
    println!("training at {training_cutoff} Hz...");
    let (params, _) = fit(&train, &val, &cfg, &arch)?;
    let ck = Checkpoint {
        params,
        window_len: k,
        scaling,
        training_cutoff_hz: training_cutoff,
    };

    // Inputs at richer frequency content; the reference stays the
    // training-cutoff-filtered ground truth.
    let matrix = noise_sweep(&ck, &test_run, &[45.0, 25.0, 15.0, 5.0], 8)?;
    let mut out = Vec::new();
    matrix.write_table(&mut out)?;
    print!("{}", String::from_utf8_lossy(&out));

    let matched = matrix.row(training_cutoff).unwrap();
    for (c, name) in vemo::nn::STATE_NAMES.iter().enumerate() {
        let worst = matrix
            .rows
            .iter()
            .map(|r| r.channels[c].mean_rel)
            .fold(0.0f64, f64::max);
        println!(
            "{name:<9} worst/matched mean rel. error: {:.2}x",
            worst / matched.channels[c].mean_rel
        );
    }
    Ok(())
}
