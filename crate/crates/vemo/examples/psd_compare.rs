//! Spectral analysis: Welch PSD estimation and the band-restricted log-power
//! error used to compare predicted and reference signals.
//!
//! ```sh
//! cargo run --release --example psd_compare
//! ```

use vemo::eval::psd_band_error;
use vemo::signal::welch_psd;

fn main() -> vemo::Result<()> {
    let fs = 100.0;
    let n = 8192;

    // Reference: two tones inside the ride band plus broadband noise.
    let mut seed = 0x2545F4914F6CDD1Du64;
    let mut noise = move || {
        // xorshift; plenty for a demo signal.
        seed ^= seed << 13;
        seed ^= seed >> 7;
        seed ^= seed << 17;
        (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let reference: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            (2.0 * std::f64::consts::PI * 1.2 * t).sin()
                + 0.4 * (2.0 * std::f64::consts::PI * 3.5 * t).sin()
                + 0.05 * noise()
        })
        .collect();
    // "Prediction": same tones, slightly misscaled second harmonic.
    let prediction: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            (2.0 * std::f64::consts::PI * 1.2 * t).sin()
                + 0.48 * (2.0 * std::f64::consts::PI * 3.5 * t).sin()
                + 0.05 * noise()
        })
        .collect();

    let psd_ref = welch_psd(&reference, fs, 1024, 0.5)?;
    let psd_pred = welch_psd(&prediction, fs, 1024, 0.5)?;

    println!("Welch PSD: {} bins, df = {:.4} Hz", psd_ref.frequencies.len(), psd_ref.bin_width());
    println!("integrated reference power: {:.4}", psd_ref.total_power());

    for (lo, hi) in [(0.25, 5.0), (0.25, 20.0), (20.0, 45.0)] {
        let err = psd_band_error(&psd_ref, &psd_pred, (lo, hi))?;
        println!("log-power band error over {lo:>5.2}-{hi:>5.2} Hz: {err:.4}");
    }

    // Peak location sanity.
    let (peak, _) = psd_ref
        .power
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    println!("dominant reference bin at {:.2} Hz", psd_ref.frequencies[peak]);
    Ok(())
}
