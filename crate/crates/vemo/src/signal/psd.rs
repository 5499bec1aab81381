//! Welch power spectral density estimation.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{Error, Result};

/// One-sided power spectral density estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    /// Frequency grid, Hz.
    pub frequencies: Vec<f64>,
    /// Power density per bin, (signal units)^2 / Hz.
    pub power: Vec<f64>,
    /// Segment length used by the estimator, samples.
    pub segment_len: usize,
    /// Segment overlap fraction.
    pub overlap: f64,
}

impl PsdEstimate {
    /// Frequency resolution of the grid.
    pub fn bin_width(&self) -> f64 {
        if self.frequencies.len() > 1 {
            self.frequencies[1] - self.frequencies[0]
        } else {
            0.0
        }
    }

    /// Integral of the density over frequency (trapezoid-free Riemann sum,
    /// matching the estimator's own discretization).
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.bin_width()
    }
}

/// Welch estimator: Hann-windowed averaged periodogram, one-sided, density
/// scaled. Segments advance by `segment_len * (1 - overlap)` samples.
pub fn welch_psd(
    series: &[f64],
    sample_rate_hz: f64,
    segment_len: usize,
    overlap: f64,
) -> Result<PsdEstimate> {
    if !(sample_rate_hz > 0.0) {
        return Err(Error::Config(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    if segment_len < 2 {
        return Err(Error::Config(format!(
            "segment length must be at least 2, got {segment_len}"
        )));
    }
    if segment_len > series.len() {
        return Err(Error::Config(format!(
            "segment length {segment_len} exceeds series length {}",
            series.len()
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::Config(format!(
            "overlap must lie in [0, 1), got {overlap}"
        )));
    }

    // Periodic Hann window.
    let window: Vec<f64> = (0..segment_len)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / segment_len as f64).cos())
        .collect();
    let win_power: f64 = window.iter().map(|w| w * w).sum();
    let scale = 1.0 / (sample_rate_hz * win_power);

    let noverlap = (segment_len as f64 * overlap).floor() as usize;
    let hop = segment_len - noverlap;

    let n_freq = segment_len / 2 + 1;
    let mut acc = vec![0.0f64; n_freq];
    let mut buf = vec![Complex64::new(0.0, 0.0); segment_len];
    let fft = FftPlanner::new().plan_fft_forward(segment_len);

    let mut n_segments = 0usize;
    let mut start = 0usize;
    while start + segment_len <= series.len() {
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = Complex64::new(series[start + i] * window[i], 0.0);
        }
        fft.process(&mut buf);
        for (k, slot) in acc.iter_mut().enumerate() {
            let mut p = buf[k].norm_sqr() * scale;
            // One-sided: double everything except DC and (for even lengths)
            // the Nyquist bin.
            if k != 0 && !(segment_len % 2 == 0 && k == segment_len / 2) {
                p *= 2.0;
            }
            *slot += p;
        }
        n_segments += 1;
        start += hop;
    }

    let power: Vec<f64> = acc.iter().map(|p| p / n_segments as f64).collect();
    let frequencies: Vec<f64> = (0..n_freq)
        .map(|k| k as f64 * sample_rate_hz / segment_len as f64)
        .collect();

    Ok(PsdEstimate {
        frequencies,
        power,
        segment_len,
        overlap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn sinusoid_peaks_at_its_frequency() {
        let fs = 100.0;
        let x: Vec<f64> = (0..4096)
            .map(|i| (2.0 * std::f64::consts::PI * 10.0 * i as f64 / fs).sin())
            .collect();
        let psd = welch_psd(&x, fs, 1024, 0.5).unwrap();
        let (peak_idx, _) = psd
            .power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!((psd.frequencies[peak_idx] - 10.0).abs() < psd.bin_width());
    }

    #[test]
    fn zero_series_gives_zero_power() {
        let psd = welch_psd(&vec![0.0; 2048], 100.0, 512, 0.5).unwrap();
        assert!(psd.power.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn power_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..4096).map(|_| normal.sample(&mut rng)).collect();
        let psd = welch_psd(&x, 100.0, 1024, 0.5).unwrap();
        assert!(psd.power.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn white_noise_parseval_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let sigma = 1.7;
        let normal = Normal::new(0.0, sigma).unwrap();
        let x: Vec<f64> = (0..32768).map(|_| normal.sample(&mut rng)).collect();
        let psd = welch_psd(&x, 100.0, 1024, 0.5).unwrap();
        let variance = sigma * sigma;
        let integrated = psd.total_power();
        let rel = (integrated - variance).abs() / variance;
        assert!(rel < 0.05, "integrated {integrated} vs variance {variance}");
    }

    #[test]
    fn segment_longer_than_series_rejected() {
        assert!(welch_psd(&[0.0; 100], 100.0, 256, 0.5).is_err());
    }

    #[test]
    fn bad_overlap_rejected() {
        assert!(welch_psd(&[0.0; 100], 100.0, 64, 1.0).is_err());
        assert!(welch_psd(&[0.0; 100], 100.0, 64, -0.1).is_err());
    }
}
