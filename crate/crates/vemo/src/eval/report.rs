//! One-step evaluation: per-channel metrics, histograms, relative-error time
//! series and PSD comparison.

use rayon::prelude::*;
use std::io::Write;

use crate::data::WindowedDataset;
use crate::eval::metrics::{max_abs_error, mean, median, relative_error_series, rmse};
use crate::nn::{vemo_forward, Checkpoint, STATE_NAMES};
use crate::signal::{welch_psd, PsdEstimate};
use crate::{Error, Result};

/// Windows per parallel work unit (fixed so reduction order is stable).
const EVAL_CHUNK: usize = 16;

/// Physical units of the four state channels, for report rendering.
pub const STATE_UNITS: [&str; 4] = ["m/s^2", "m/s^2", "deg/s", "km/h"];

/// Relative-error histogram: 100 uniform bins over `[0, hi]` where `hi` is
/// the 99.5th percentile; everything above accumulates in the last bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn from_series(series: &[f64]) -> Self {
        const BINS: usize = 100;
        let mut sorted = series.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let idx = ((series.len() as f64 * 0.995).ceil() as usize).clamp(1, series.len()) - 1;
        let mut hi = sorted[idx];
        if hi <= 0.0 {
            hi = 1.0;
        }
        let mut counts = vec![0u64; BINS];
        for &v in series {
            let bin = ((v / hi * BINS as f64).floor() as usize).min(BINS - 1);
            counts[bin] += 1;
        }
        Self {
            lo: 0.0,
            hi,
            counts,
        }
    }
}

/// Everything measured for one state channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEval {
    pub name: &'static str,
    pub units: &'static str,
    /// RMSE in physical units.
    pub rmse: f64,
    /// Mean relative error, percent of the global max |reference|.
    pub mean_rel: f64,
    /// Median relative error, percent.
    pub median_rel: f64,
    /// Maximum absolute error in physical units.
    pub e_max: f64,
    /// Relative-error time series, percent.
    pub rel_series: Vec<f64>,
    pub histogram: Histogram,
    pub psd_reference: PsdEstimate,
    pub psd_prediction: PsdEstimate,
}

/// Full one-step evaluation report.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub channels: [ChannelEval; 4],
    pub n_windows: usize,
}

impl EvalReport {
    /// Plain-text summary table (RMSE / mean and median rel. error / E_max
    /// per channel).
    pub fn write_summary(&self, mut w: impl Write) -> Result<()> {
        writeln!(
            w,
            "{:<10} {:>12} {:>16} {:>18} {:>12}",
            "Signal", "RMSE", "Mean e_rel [%]", "Median e_rel [%]", "E_max"
        )?;
        for c in &self.channels {
            writeln!(
                w,
                "{:<10} {:>12.4} {:>16.4} {:>18.4} {:>12.4}",
                format!("{} [{}]", c.name, c.units),
                c.rmse,
                c.mean_rel,
                c.median_rel,
                c.e_max
            )?;
        }
        writeln!(w, "windows: {}", self.n_windows)?;
        Ok(())
    }
}

/// Predict every window of `test` from ground-truth history (no rollout),
/// unscale to physical units, and assemble all metrics.
///
/// The dataset must have been built with the same window length and scaling
/// table the checkpoint was trained under.
pub fn one_step_eval(ck: &Checkpoint, test: &WindowedDataset) -> Result<EvalReport> {
    check_compatible(ck, test)?;
    if test.is_empty() {
        return Err(Error::Config("test dataset has no windows".into()));
    }

    // Scaled predictions, deterministic order.
    let indices: Vec<usize> = (0..test.len()).collect();
    let chunks: Vec<Result<Vec<[f64; 4]>>> = indices
        .par_chunks(EVAL_CHUNK)
        .map(|chunk| {
            chunk
                .iter()
                .map(|&i| vemo_forward(&ck.params, test.window(i)))
                .collect()
        })
        .collect();
    let mut pred_scaled = Vec::with_capacity(test.len());
    for c in chunks {
        pred_scaled.extend(c?);
    }

    // Physical-unit series per channel.
    let scaling = test.scaling();
    let n = test.len();
    let mut reference: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::with_capacity(n));
    let mut prediction: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::with_capacity(n));
    for i in 0..n {
        let y = scaling.unscale_state(&test.target(i).try_into().expect("4-channel target"));
        let p = scaling.unscale_state(&pred_scaled[i]);
        for c in 0..4 {
            reference[c].push(y[c]);
            prediction[c].push(p[c]);
        }
    }

    let psd_segment = 1024usize.min(n);
    let fs = test.sample_rate_hz();
    let channels: [ChannelEval; 4] = std::array::from_fn(|c| {
        let y = &reference[c];
        let p = &prediction[c];
        let rel = relative_error_series(y, p).expect("non-degenerate reference");
        ChannelEval {
            name: STATE_NAMES[c],
            units: STATE_UNITS[c],
            rmse: rmse(y, p).expect("equal lengths"),
            mean_rel: mean(&rel),
            median_rel: median(&rel),
            e_max: max_abs_error(y, p).expect("equal lengths"),
            histogram: Histogram::from_series(&rel),
            rel_series: rel,
            psd_reference: welch_psd(y, fs, psd_segment, 0.5).expect("segment <= length"),
            psd_prediction: welch_psd(p, fs, psd_segment, 0.5).expect("segment <= length"),
        }
    });

    Ok(EvalReport {
        channels,
        n_windows: n,
    })
}

/// Field-by-field compatibility check between a checkpoint and a dataset.
pub(crate) fn check_compatible(ck: &Checkpoint, ds: &WindowedDataset) -> Result<()> {
    let mut diffs = Vec::new();
    if ck.window_len != ds.window_len() {
        diffs.push(format!(
            "window_len: checkpoint {} vs dataset {}",
            ck.window_len,
            ds.window_len()
        ));
    }
    let a = &ck.scaling;
    let b = ds.scaling();
    for (name, va, vb) in [
        ("u_t", a.u_t, b.u_t),
        ("u_b", a.u_b, b.u_b),
        ("u_s_deg", a.u_s_deg, b.u_s_deg),
        ("u_g", a.u_g, b.u_g),
        ("a_x_g", a.a_x_g, b.a_x_g),
        ("a_y_g", a.a_y_g, b.a_y_g),
        ("yaw_rate_deg_s", a.yaw_rate_deg_s, b.yaw_rate_deg_s),
        ("v_x_kmh", a.v_x_kmh, b.v_x_kmh),
        ("gravity", a.gravity, b.gravity),
    ] {
        if va != vb {
            diffs.push(format!("scaling.{name}: checkpoint {va} vs dataset {vb}"));
        }
    }
    if diffs.is_empty() {
        Ok(())
    } else {
        Err(Error::Mismatch(format!(
            "checkpoint and dataset are incompatible:\n  {}",
            diffs.join("\n  ")
        )))
    }
}

/// Relative L2 error of log-power over a frequency band.
pub fn psd_band_error(
    reference: &PsdEstimate,
    prediction: &PsdEstimate,
    band: (f64, f64),
) -> Result<f64> {
    if reference.frequencies.len() != prediction.frequencies.len()
        || reference
            .frequencies
            .iter()
            .zip(&prediction.frequencies)
            .any(|(a, b)| (a - b).abs() > 1e-9 * a.abs().max(1.0))
    {
        return Err(Error::Mismatch(
            "PSD frequency grids do not match".into(),
        ));
    }
    let (lo, hi) = band;
    if !(lo < hi) {
        return Err(Error::Config(format!("empty band ({lo}, {hi})")));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    let mut bins = 0usize;
    for ((&f, &r), &p) in reference
        .frequencies
        .iter()
        .zip(&reference.power)
        .zip(&prediction.power)
    {
        if f < lo || f > hi {
            continue;
        }
        bins += 1;
        if r <= 0.0 || p <= 0.0 {
            return Err(Error::Numeric(format!(
                "non-positive power at {f} Hz; log-power error undefined"
            )));
        }
        let lr = r.ln();
        num += (p.ln() - lr) * (p.ln() - lr);
        den += lr * lr;
    }
    if bins == 0 {
        return Err(Error::Config(format!(
            "band ({lo}, {hi}) Hz contains no grid frequencies"
        )));
    }
    if den == 0.0 {
        return Err(Error::Numeric(
            "reference log-power norm is zero over the band".into(),
        ));
    }
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::WindowedDataset;
    use crate::nn::{ArchConfig, VemoParams};
    use crate::signal::ScalingTable;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tiny_checkpoint(k: usize, seed: u64) -> Checkpoint {
        Checkpoint {
            params: VemoParams::init(
                &ArchConfig {
                    encoder_widths: vec![6],
                    branch_hidden: vec![4],
                },
                seed,
            )
            .unwrap(),
            window_len: k,
            scaling: ScalingTable::default(),
            training_cutoff_hz: 5.0,
        }
    }

    fn random_windows(n: usize, k: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n * k * 8).map(|_| rng.gen_range(-0.5..0.5)).collect()
    }

    #[test]
    fn perfect_predictor_fixture_gives_zero_metrics() {
        // Rig the dataset targets to equal whatever the model outputs.
        let k = 8;
        let n = 160;
        let ck = tiny_checkpoint(k, 3);
        let x = random_windows(n, k, 4);
        let mut y = Vec::with_capacity(n * 4);
        for i in 0..n {
            let pred = vemo_forward(&ck.params, &x[i * k * 8..(i + 1) * k * 8]).unwrap();
            y.extend_from_slice(&pred);
        }
        let ds = WindowedDataset::from_parts(
            x,
            y,
            k,
            100.0,
            ScalingTable::default(),
            vec!["rigged".into()],
        )
        .unwrap();
        let report = one_step_eval(&ck, &ds).unwrap();
        for c in &report.channels {
            assert_eq!(c.rmse, 0.0);
            assert_eq!(c.e_max, 0.0);
            assert_eq!(c.mean_rel, 0.0);
            assert!(c.rel_series.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn zero_predictor_matches_closed_form() {
        // Zeroing every branch output layer forces predictions to exactly 0.
        let k = 8;
        let n = 200;
        let mut ck = tiny_checkpoint(k, 5);
        for branch in &mut ck.params.branches {
            branch.layers.last_mut().unwrap().w.fill(0.0);
        }
        let x = random_windows(n, k, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let y: Vec<f64> = (0..n * 4).map(|_| rng.gen_range(-0.8..0.8)).collect();
        let ds = WindowedDataset::from_parts(
            x,
            y.clone(),
            k,
            100.0,
            ScalingTable::default(),
            vec!["zero".into()],
        )
        .unwrap();
        let report = one_step_eval(&ck, &ds).unwrap();

        let scaling = ScalingTable::default();
        for (c, ch) in report.channels.iter().enumerate() {
            // mean e_rel of the zero predictor = mean|y| / max|y| * 100.
            let phys: Vec<f64> = (0..n)
                .map(|i| y[i * 4 + c] * scaling.state_factors()[c])
                .collect();
            let max = phys.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let expect = phys.iter().map(|v| v.abs()).sum::<f64>() / n as f64 / max * 100.0;
            assert!(
                (ch.mean_rel - expect).abs() < 1e-9,
                "{}: {} vs {expect}",
                ch.name,
                ch.mean_rel
            );
            assert!(ch.e_max >= ch.rmse);
        }
    }

    #[test]
    fn mean_rel_recomputable_from_emitted_series() {
        let k = 8;
        let n = 120;
        let ck = tiny_checkpoint(k, 9);
        let x = random_windows(n, k, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let y: Vec<f64> = (0..n * 4).map(|_| rng.gen_range(-0.8..0.8)).collect();
        let ds =
            WindowedDataset::from_parts(x, y, k, 100.0, ScalingTable::default(), vec!["m".into()])
                .unwrap();
        let report = one_step_eval(&ck, &ds).unwrap();
        for ch in &report.channels {
            let recomputed = mean(&ch.rel_series);
            assert!((recomputed - ch.mean_rel).abs() <= 1e-12);
            assert!(ch.e_max >= ch.rmse, "{}: metric ordering", ch.name);
        }
    }

    #[test]
    fn eval_is_pure() {
        let k = 8;
        let ck = tiny_checkpoint(k, 13);
        let x = random_windows(60, k, 14);
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let y: Vec<f64> = (0..60 * 4).map(|_| rng.gen_range(-0.8..0.8)).collect();
        let ds =
            WindowedDataset::from_parts(x, y, k, 100.0, ScalingTable::default(), vec!["p".into()])
                .unwrap();
        let a = one_step_eval(&ck, &ds).unwrap();
        let b = one_step_eval(&ck, &ds).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn window_len_mismatch_is_an_artifact_error() {
        let ck = tiny_checkpoint(10, 17);
        let x = random_windows(30, 8, 18);
        let y = vec![0.1; 30 * 4];
        let ds =
            WindowedDataset::from_parts(x, y, 8, 100.0, ScalingTable::default(), vec!["k".into()])
                .unwrap();
        let err = one_step_eval(&ck, &ds).unwrap_err();
        assert!(matches!(err, Error::Mismatch(_)), "{err}");
        assert!(err.to_string().contains("window_len"), "{err}");
    }

    #[test]
    fn scaling_mismatch_lists_fields() {
        let ck = tiny_checkpoint(8, 19);
        let x = random_windows(30, 8, 20);
        let y = vec![0.1; 30 * 4];
        let mut scaling = ScalingTable::default();
        scaling.v_x_kmh = 300.0;
        let ds = WindowedDataset::from_parts(x, y, 8, 100.0, scaling, vec!["s".into()]).unwrap();
        let err = one_step_eval(&ck, &ds).unwrap_err();
        assert!(err.to_string().contains("v_x_kmh"), "{err}");
    }

    #[test]
    fn psd_band_error_closed_forms() {
        let grid: Vec<f64> = (0..64).map(|i| i as f64 * 0.5).collect();
        let power: Vec<f64> = (0..64).map(|i| 1.5 + (i as f64 * 0.37).sin().abs()).collect();
        let reference = PsdEstimate {
            frequencies: grid.clone(),
            power: power.clone(),
            segment_len: 128,
            overlap: 0.5,
        };
        // Identical PSDs -> 0.
        assert_eq!(psd_band_error(&reference, &reference, (1.0, 10.0)).unwrap(), 0.0);

        // Uniform 2x power ratio -> |ln 2| * sqrt(bins) / ||ln r||_band.
        let doubled = PsdEstimate {
            power: power.iter().map(|p| 2.0 * p).collect(),
            ..reference.clone()
        };
        let band = (1.0, 10.0);
        let got = psd_band_error(&reference, &doubled, band).unwrap();
        let in_band: Vec<f64> = grid
            .iter()
            .zip(&power)
            .filter(|(f, _)| **f >= band.0 && **f <= band.1)
            .map(|(_, p)| *p)
            .collect();
        let expect = (2.0f64.ln().powi(2) * in_band.len() as f64).sqrt()
            / in_band.iter().map(|p| p.ln() * p.ln()).sum::<f64>().sqrt();
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");

        // Band outside the grid -> error.
        assert!(psd_band_error(&reference, &doubled, (100.0, 200.0)).is_err());
        // Grid mismatch -> error.
        let shifted = PsdEstimate {
            frequencies: grid.iter().map(|f| f + 0.1).collect(),
            ..reference.clone()
        };
        assert!(psd_band_error(&reference, &shifted, band).is_err());
    }

    #[test]
    fn histogram_overflow_lands_in_last_bin() {
        let mut series = vec![1.0; 995];
        series.extend(vec![50.0; 5]);
        let h = Histogram::from_series(&series);
        assert_eq!(h.counts.iter().sum::<u64>(), 1000);
        assert!(h.hi <= 50.0);
        assert!(*h.counts.last().unwrap() >= 5);
    }
}
