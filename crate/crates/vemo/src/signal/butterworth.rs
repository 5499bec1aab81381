//! Butterworth lowpass design and zero-phase application.
//!
//! The designer maps the analog Butterworth prototype through the bilinear
//! transform with frequency prewarping and realizes the result as cascaded
//! second-order sections; an eighth-order direct form would be numerically
//! fragile, the cascade is not.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::{Error, Result};

/// One second-order section, denominator normalized to `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    /// DC gain of this section.
    fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// Steady-state internal state (direct form II transposed) for a unit
    /// constant input. Scaling these by the first input sample removes the
    /// startup transient for signals that begin near steady state.
    fn unit_step_state(&self) -> (f64, f64) {
        let g = self.dc_gain();
        (g - self.b0, self.b2 - self.a2 * g)
    }
}

/// Even-order Butterworth lowpass as a cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    sections: Vec<Biquad>,
    order: usize,
    cutoff_hz: f64,
    sample_rate_hz: f64,
}

impl SosFilter {
    /// Design an even-order Butterworth lowpass.
    ///
    /// Analog prototype poles are prewarped, mapped through the bilinear
    /// transform and paired conjugate-by-conjugate into biquads, each
    /// normalized to unity DC gain.
    pub fn butterworth_lowpass(order: usize, cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        if order == 0 || order % 2 != 0 {
            return Err(Error::Config(format!(
                "filter order must be a positive even integer, got {order}"
            )));
        }
        if !(sample_rate_hz > 0.0) {
            return Err(Error::Config(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if !(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0) {
            return Err(Error::Config(format!(
                "cutoff must satisfy 0 < cutoff < Nyquist ({} Hz), got {cutoff_hz} Hz",
                sample_rate_hz / 2.0
            )));
        }

        let n = order;
        let fs = sample_rate_hz;
        // Prewarp so the digital response hits -3 dB exactly at cutoff_hz.
        let warped = 2.0 * fs * (PI * cutoff_hz / fs).tan();

        let mut sections = Vec::with_capacity(n / 2);
        for k in 1..=n / 2 {
            // Prototype pole in the left half plane; its conjugate completes
            // the pair for this section.
            let theta = PI * (2 * k + n - 1) as f64 / (2 * n) as f64;
            let pole = warped * Complex64::new(theta.cos(), theta.sin());
            // Bilinear transform: s -> z.
            let two_fs = Complex64::new(2.0 * fs, 0.0);
            let zp = (two_fs + pole) / (two_fs - pole);

            let a1 = -2.0 * zp.re;
            let a2 = zp.norm_sqr();
            // Two zeros at z = -1; gain set for unity DC per section.
            let g = (1.0 + a1 + a2) / 4.0;
            sections.push(Biquad {
                b0: g,
                b1: 2.0 * g,
                b2: g,
                a1,
                a2,
            });
        }

        Ok(Self {
            sections,
            order,
            cutoff_hz,
            sample_rate_hz,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn cutoff_hz(&self) -> f64 {
        self.cutoff_hz
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Magnitude of the cascade frequency response at `freq_hz`.
    pub fn magnitude_at(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate_hz;
        let z1 = Complex64::new(w.cos(), -w.sin());
        let z2 = z1 * z1;
        let mut h = Complex64::new(1.0, 0.0);
        for s in &self.sections {
            let num = Complex64::new(s.b0, 0.0) + s.b1 * z1 + s.b2 * z2;
            let den = Complex64::new(1.0, 0.0) + s.a1 * z1 + s.a2 * z2;
            h *= num / den;
        }
        h.norm()
    }

    /// Cascade gain at `freq_hz` in dB.
    pub fn gain_db_at(&self, freq_hz: f64) -> f64 {
        20.0 * self.magnitude_at(freq_hz).log10()
    }

    /// Single forward pass through the cascade, direct form II transposed,
    /// each section starting from steady state for its first input sample.
    fn filter_forward(&self, series: &[f64]) -> Vec<f64> {
        let mut y = series.to_vec();
        for s in &self.sections {
            let (zi1, zi2) = s.unit_step_state();
            let x0 = y.first().copied().unwrap_or(0.0);
            let mut s1 = zi1 * x0;
            let mut s2 = zi2 * x0;
            for v in y.iter_mut() {
                let x = *v;
                let out = s.b0 * x + s1;
                s1 = s.b1 * x - s.a1 * out + s2;
                s2 = s.b2 * x - s.a2 * out;
                *v = out;
            }
        }
        y
    }

    /// Zero-phase application: forward pass, then a pass over the reversed
    /// signal, with odd-reflection padding of `3 * order` samples at both
    /// ends. Output length equals input length; the passband sees no phase
    /// shift.
    pub fn apply_zero_phase(&self, series: &[f64]) -> Result<Vec<f64>> {
        let min_len = 3 * self.order;
        if series.len() < min_len {
            return Err(Error::Config(format!(
                "series of length {} is shorter than the padding requirement {} (3 x order)",
                series.len(),
                min_len
            )));
        }
        let n = series.len();
        let pad = min_len.min(n - 1);

        // Odd reflection keeps value and slope continuous at both ends.
        let mut padded = Vec::with_capacity(n + 2 * pad);
        let first = series[0];
        let last = series[n - 1];
        for i in (1..=pad).rev() {
            padded.push(2.0 * first - series[i]);
        }
        padded.extend_from_slice(series);
        for i in 1..=pad {
            padded.push(2.0 * last - series[n - 1 - i]);
        }

        let mut y = self.filter_forward(&padded);
        y.reverse();
        let mut y = self.filter_forward(&y);
        y.reverse();

        Ok(y[pad..pad + n].to_vec())
    }
}
