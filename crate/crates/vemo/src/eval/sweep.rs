//! Cross-cutoff noise-robustness sweep.
//!
//! The trained model is fed inputs filtered at cutoffs at or above its
//! training cutoff, while the reference stays the training-cutoff-filtered
//! ground truth (the model's target regime). Each row of the matrix is one
//! input cutoff.

use std::io::Write;

use rayon::prelude::*;

use crate::data::{make_windows, Run, WindowedDataset};
use crate::eval::metrics::{max_abs_error, mean, median, relative_error_series, rmse};
use crate::nn::{vemo_forward, Checkpoint, STATE_NAMES};
use crate::signal::SosFilter;
use crate::{Error, Result};

const EVAL_CHUNK: usize = 16;

/// Scalar metrics of one channel under one input cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelMetrics {
    pub rmse: f64,
    pub mean_rel: f64,
    pub median_rel: f64,
    pub e_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub input_cutoff_hz: f64,
    pub channels: [ChannelMetrics; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepMatrix {
    pub training_cutoff_hz: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepMatrix {
    /// Metrics for a given input cutoff, if present.
    pub fn row(&self, cutoff_hz: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| (r.input_cutoff_hz - cutoff_hz).abs() < 1e-9)
    }

    /// Plain-text table in the paper's layout: one metric block per row
    /// group, one column per input cutoff.
    pub fn write_table(&self, mut w: impl Write) -> Result<()> {
        write!(w, "{:<10} {:<12}", "Signal", "Metric")?;
        for row in &self.rows {
            write!(w, " {:>10}", format!("{} Hz", row.input_cutoff_hz))?;
        }
        writeln!(w)?;
        for (metric, pick) in [
            ("RMSE", 0usize),
            ("mean e_rel", 1),
            ("E_max", 2),
        ] {
            for c in 0..4 {
                write!(w, "{:<10} {:<12}", STATE_NAMES[c], metric)?;
                for row in &self.rows {
                    let m = &row.channels[c];
                    let v = match pick {
                        0 => m.rmse,
                        1 => m.mean_rel,
                        _ => m.e_max,
                    };
                    write!(w, " {v:>10.4}")?;
                }
                writeln!(w)?;
            }
        }
        writeln!(w, "training cutoff: {} Hz", self.training_cutoff_hz)?;
        Ok(())
    }
}

/// Run the sweep. `raw_test` is the unfiltered test run; every cutoff in
/// `input_cutoffs` must be at or above the checkpoint's training cutoff.
pub fn noise_sweep(
    ck: &Checkpoint,
    raw_test: &Run,
    input_cutoffs: &[f64],
    filter_order: usize,
) -> Result<SweepMatrix> {
    if input_cutoffs.is_empty() {
        return Err(Error::Config("no input cutoffs given".into()));
    }
    for &c in input_cutoffs {
        if c < ck.training_cutoff_hz - 1e-9 {
            return Err(Error::Config(format!(
                "input cutoff {c} Hz is below the training cutoff {} Hz",
                ck.training_cutoff_hz
            )));
        }
    }

    let fs = raw_test.sample_rate_hz();
    let k = ck.window_len;

    // Reference: ground truth filtered at the model's training regime.
    let train_filter = SosFilter::butterworth_lowpass(filter_order, ck.training_cutoff_hz, fs)?;
    let reference_ds = make_windows(&raw_test.filtered(&train_filter)?, k, &ck.scaling)?;
    let n = reference_ds.len();
    let mut reference: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::with_capacity(n));
    for i in 0..n {
        let y = ck
            .scaling
            .unscale_state(&reference_ds.target(i).try_into().expect("4 channels"));
        for c in 0..4 {
            reference[c].push(y[c]);
        }
    }

    let mut rows = Vec::with_capacity(input_cutoffs.len());
    for &cutoff in input_cutoffs {
        let filter = SosFilter::butterworth_lowpass(filter_order, cutoff, fs)?;
        let input_ds = make_windows(&raw_test.filtered(&filter)?, k, &ck.scaling)?;
        let predictions = predict_all(ck, &input_ds)?;

        let channels: [ChannelMetrics; 4] = std::array::from_fn(|c| {
            let pred: Vec<f64> = predictions.iter().map(|p| p[c]).collect();
            let rel = relative_error_series(&reference[c], &pred).expect("non-zero reference");
            ChannelMetrics {
                rmse: rmse(&reference[c], &pred).expect("equal lengths"),
                mean_rel: mean(&rel),
                median_rel: median(&rel),
                e_max: max_abs_error(&reference[c], &pred).expect("equal lengths"),
            }
        });
        rows.push(SweepRow {
            input_cutoff_hz: cutoff,
            channels,
        });
    }

    Ok(SweepMatrix {
        training_cutoff_hz: ck.training_cutoff_hz,
        rows,
    })
}

/// Physical-unit predictions over every window, deterministic order.
fn predict_all(ck: &Checkpoint, ds: &WindowedDataset) -> Result<Vec<[f64; 4]>> {
    let indices: Vec<usize> = (0..ds.len()).collect();
    let chunks: Vec<Result<Vec<[f64; 4]>>> = indices
        .par_chunks(EVAL_CHUNK)
        .map(|chunk| {
            chunk
                .iter()
                .map(|&i| {
                    let scaled = vemo_forward(&ck.params, ds.window(i))?;
                    Ok(ck.scaling.unscale_state(&scaled))
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(ds.len());
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::test_support::random_run;
    use crate::eval::one_step_eval;
    use crate::nn::{ArchConfig, VemoParams};
    use crate::signal::ScalingTable;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_checkpoint(k: usize) -> Checkpoint {
        Checkpoint {
            params: VemoParams::init(
                &ArchConfig {
                    encoder_widths: vec![6],
                    branch_hidden: vec![4],
                },
                1,
            )
            .unwrap(),
            window_len: k,
            scaling: ScalingTable::default(),
            training_cutoff_hz: 5.0,
        }
    }

    #[test]
    fn cutoff_below_training_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let run = random_run(&mut rng, 400, "sweep");
        let ck = tiny_checkpoint(20);
        let err = noise_sweep(&ck, &run, &[45.0, 1.0], 8).unwrap_err();
        assert!(err.to_string().contains("below the training cutoff"), "{err}");
    }

    #[test]
    fn degenerate_row_matches_plain_eval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let run = random_run(&mut rng, 400, "sweep");
        let ck = tiny_checkpoint(20);
        let matrix = noise_sweep(&ck, &run, &[45.0, 25.0, 15.0, 5.0], 8).unwrap();
        assert_eq!(matrix.rows.len(), 4);

        // The training-cutoff row must equal a plain one-step evaluation on
        // the training-filtered test set.
        let filter = SosFilter::butterworth_lowpass(8, 5.0, 100.0).unwrap();
        let ds = make_windows(&run.filtered(&filter).unwrap(), 20, &ck.scaling).unwrap();
        let report = one_step_eval(&ck, &ds).unwrap();
        let degenerate = matrix.row(5.0).unwrap();
        for c in 0..4 {
            assert_eq!(degenerate.channels[c].rmse, report.channels[c].rmse);
            assert_eq!(degenerate.channels[c].mean_rel, report.channels[c].mean_rel);
            assert_eq!(degenerate.channels[c].e_max, report.channels[c].e_max);
        }
    }
}
