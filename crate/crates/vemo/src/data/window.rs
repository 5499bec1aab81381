//! Sliding-window tensorization.
//!
//! A run of `T` samples becomes `N = T - k` supervised pairs: window `n`
//! holds the scaled 8-channel records at indices `n .. n+k`, its target is
//! the scaled 4-channel state at index `n + k`.

use crate::data::Run;
use crate::signal::ScalingTable;
use crate::{Error, Result};

/// Windowed, nondimensionalized dataset.
///
/// `x` is row-major `(n, k, 8)`, `y` row-major `(n, 4)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    x: Vec<f64>,
    y: Vec<f64>,
    n: usize,
    k: usize,
    sample_rate_hz: f64,
    scaling: ScalingTable,
    labels: Vec<String>,
}

impl WindowedDataset {
    /// Shape-checked constructor; used by the cache reader and by tests that
    /// build synthetic datasets directly.
    pub fn from_parts(
        x: Vec<f64>,
        y: Vec<f64>,
        k: usize,
        sample_rate_hz: f64,
        scaling: ScalingTable,
        labels: Vec<String>,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("window length k must be at least 1".into()));
        }
        if x.len() % (k * 8) != 0 {
            return Err(Error::Config(format!(
                "X buffer length {} is not a multiple of k*8 = {}",
                x.len(),
                k * 8
            )));
        }
        let n = x.len() / (k * 8);
        if y.len() != n * 4 {
            return Err(Error::Config(format!(
                "Y buffer length {} does not match {} windows of 4 channels",
                y.len(),
                n
            )));
        }
        Ok(Self {
            x,
            y,
            n,
            k,
            sample_rate_hz,
            scaling,
            labels,
        })
    }

    /// Number of windows `N`.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Window length `k`.
    pub fn window_len(&self) -> usize {
        self.k
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn scaling(&self) -> &ScalingTable {
        &self.scaling
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Window `i` as a flat `k x 8` slice.
    pub fn window(&self, i: usize) -> &[f64] {
        &self.x[i * self.k * 8..(i + 1) * self.k * 8]
    }

    /// Target `i` as a 4-channel slice (scaled state at the step after the
    /// window).
    pub fn target(&self, i: usize) -> &[f64] {
        &self.y[i * 4..(i + 1) * 4]
    }

    pub fn x_buffer(&self) -> &[f64] {
        &self.x
    }

    pub fn y_buffer(&self) -> &[f64] {
        &self.y
    }
}

/// Tensorize a run: `N = T - k` windows of `k` scaled records each, targets
/// one step ahead.
pub fn make_windows(run: &Run, k: usize, scaling: &ScalingTable) -> Result<WindowedDataset> {
    if k == 0 {
        return Err(Error::Config("window length k must be at least 1".into()));
    }
    let t_len = run.len();
    if t_len <= k {
        return Err(Error::Config(format!(
            "run '{}' has {} samples; need more than the window length {}",
            run.label(),
            t_len,
            k
        )));
    }
    scaling.validate()?;

    let scaled = run.scaled_channels(scaling);
    let n = t_len - k;
    let mut x = Vec::with_capacity(n * k * 8);
    let mut y = Vec::with_capacity(n * 4);
    for w in 0..n {
        for rec in &scaled[w..w + k] {
            x.extend_from_slice(rec);
        }
        y.extend_from_slice(&scaled[w + k][4..8]);
    }
    WindowedDataset::from_parts(
        x,
        y,
        k,
        run.sample_rate_hz(),
        *scaling,
        vec![run.label().to_string()],
    )
}

/// Contiguous train/validation split at the window level. The validation
/// side drops its first `k` windows so no sample of a training window leaks
/// into any validation target.
pub fn split_dataset(
    ds: &WindowedDataset,
    train_fraction: f64,
    val_fraction: f64,
) -> Result<(WindowedDataset, WindowedDataset)> {
    if !(train_fraction > 0.0 && val_fraction > 0.0) {
        return Err(Error::Config(format!(
            "split fractions must both be positive, got ({train_fraction}, {val_fraction})"
        )));
    }
    if ((train_fraction + val_fraction) - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "split fractions must sum to 1, got {}",
            train_fraction + val_fraction
        )));
    }
    let n = ds.len();
    let k = ds.window_len();
    let n_train = (n as f64 * train_fraction).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::Config(format!(
            "split leaves a side empty: {n_train} train of {n} windows"
        )));
    }
    let val_start = n_train + k;
    if val_start >= n {
        return Err(Error::Config(format!(
            "validation split empty after excising {k} overlapping windows \
             ({} raw validation windows)",
            n - n_train
        )));
    }

    let slice = |lo: usize, hi: usize| -> Result<WindowedDataset> {
        WindowedDataset::from_parts(
            ds.x_buffer()[lo * k * 8..hi * k * 8].to_vec(),
            ds.y_buffer()[lo * 4..hi * 4].to_vec(),
            k,
            ds.sample_rate_hz(),
            *ds.scaling(),
            ds.labels().to_vec(),
        )
    };
    Ok((slice(0, n_train)?, slice(val_start, n)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::test_support::random_run;
    use crate::data::Record;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quiet_records(len: usize) -> Vec<Record> {
        (0..len)
            .map(|_| Record::from_channels([0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]))
            .collect()
    }

    #[test]
    fn shape_law() {
        let run = Run::new(100.0, quiet_records(103), "s").unwrap();
        let ds = make_windows(&run, 100, &ScalingTable::default()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.window(0).len(), 100 * 8);
        assert_eq!(ds.target(0).len(), 4);
    }

    #[test]
    fn boundary_single_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let run = random_run(&mut rng, 101, "b");
        let scaling = ScalingTable::default();
        let ds = make_windows(&run, 100, &scaling).unwrap();
        assert_eq!(ds.len(), 1);
        let expect = scaling.scale(&run.records()[100].channels());
        assert_eq!(ds.target(0), &expect[4..8]);
    }

    #[test]
    fn too_short_run_rejected() {
        let run = Run::new(100.0, quiet_records(100), "s").unwrap();
        assert!(make_windows(&run, 100, &ScalingTable::default()).is_err());
    }

    #[test]
    fn matches_naive_double_loop_on_random_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let scaling = ScalingTable::default();
        let k = 10;
        for case in 0..50 {
            let t_len = rng.gen_range(k + 1..=k + 200);
            let run = random_run(&mut rng, t_len.max(22), &format!("r{case}"));
            let t_len = run.len();
            let ds = make_windows(&run, k, &scaling).unwrap();
            assert_eq!(ds.len(), t_len - k);

            // Independent reconstruction straight from the run records.
            for w in 0..ds.len() {
                let win = ds.window(w);
                for j in 0..k {
                    let expect = scaling.scale(&run.records()[w + j].channels());
                    for c in 0..8 {
                        assert_eq!(win[j * 8 + c], expect[c], "window {w} step {j} ch {c}");
                    }
                }
                let expect = scaling.scale(&run.records()[w + k].channels());
                assert_eq!(ds.target(w), &expect[4..8], "target {w}");
            }
        }
    }

    #[test]
    fn split_excises_overlap() {
        let run = Run::new(100.0, quiet_records(1100), "s").unwrap();
        let ds = make_windows(&run, 100, &ScalingTable::default()).unwrap();
        assert_eq!(ds.len(), 1000);
        let (train, val) = split_dataset(&ds, 0.8, 0.2).unwrap();
        assert_eq!(train.len(), 800);
        assert_eq!(val.len(), 100);
        // Validation windows are the tail of the original buffer.
        assert_eq!(val.window(0), ds.window(900));
        assert_eq!(val.target(99), ds.target(999));
    }

    #[test]
    fn degenerate_fractions_rejected() {
        let run = Run::new(100.0, quiet_records(1100), "s").unwrap();
        let ds = make_windows(&run, 100, &ScalingTable::default()).unwrap();
        assert!(split_dataset(&ds, 1.0, 0.0).is_err());
        assert!(split_dataset(&ds, 0.5, 0.6).is_err());
    }

    #[test]
    fn split_empty_after_excision_rejected() {
        let run = Run::new(100.0, quiet_records(250), "s").unwrap();
        let ds = make_windows(&run, 100, &ScalingTable::default()).unwrap();
        assert_eq!(ds.len(), 150);
        assert!(split_dataset(&ds, 0.5, 0.5).is_err());
    }
}
