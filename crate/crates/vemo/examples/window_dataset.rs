//! Preprocess telemetry into a supervised dataset: filter, scale, window,
//! split, and round-trip through the binary cache format.
//!
//! ```sh
//! cargo run --release --example window_dataset
//! ```

use vemo::data::{concat_runs, make_windows, read_cache, split_dataset, write_cache};
use vemo::signal::{ScalingTable, SosFilter};
use vemo::synth::{build_training_script, simulate, SingleTrackParams};

fn main() -> vemo::Result<()> {
    let vehicle = SingleTrackParams::default();
    let fs = 100.0;

    // Two standstill-bounded acquisitions, concatenated after filtering.
    let mut runs = Vec::new();
    for seed in [1u64, 2] {
        let script = build_training_script(seed, 40.0)?;
        runs.push(simulate(&vehicle, &script, fs, 40.0, &format!("run_{seed}"))?);
    }
    let filter = SosFilter::butterworth_lowpass(8, 5.0, fs)?;
    let filtered: Vec<_> = runs
        .iter()
        .map(|r| r.filtered(&filter))
        .collect::<vemo::Result<_>>()?;
    let joined = concat_runs(&filtered)?;
    println!("concatenated {} samples from {} runs", joined.len(), runs.len());

    // One second of history per window at 100 Hz.
    let k = 100;
    let scaling = ScalingTable::default();
    let ds = make_windows(&joined, k, &scaling)?;
    println!(
        "windows: {} of shape ({k}, 8), targets of shape (4,)",
        ds.len()
    );

    let (train, val) = split_dataset(&ds, 0.8, 0.2)?;
    println!(
        "contiguous split with overlap excision: {} train / {} validation",
        train.len(),
        val.len()
    );

    let path = std::env::temp_dir().join("vemo_demo.vemods");
    write_cache(&ds, &path)?;
    let back = read_cache(&path)?;
    assert_eq!(ds, back);
    println!("cache round trip bit-exact at {}", path.display());
    Ok(())
}
