//! The three scalar error metrics, plus small statistics helpers.

use crate::{Error, Result};

fn check_pair(y: &[f64], y_hat: &[f64]) -> Result<()> {
    if y.len() != y_hat.len() {
        return Err(Error::Config(format!(
            "sequence lengths differ: {} vs {}",
            y.len(),
            y_hat.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::Config("empty sequences".into()));
    }
    Ok(())
}

/// Root mean squared error.
pub fn rmse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check_pair(y, y_hat)?;
    let sum: f64 = y
        .iter()
        .zip(y_hat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sum / y.len() as f64).sqrt())
}

/// Largest absolute residual.
pub fn max_abs_error(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check_pair(y, y_hat)?;
    Ok(y.iter()
        .zip(y_hat)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Element-wise relative error in percent, normalized by the global maximum
/// of `|y|` over the whole sequence (not per sample).
pub fn relative_error_series(y: &[f64], y_hat: &[f64]) -> Result<Vec<f64>> {
    check_pair(y, y_hat)?;
    let norm = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if norm == 0.0 {
        return Err(Error::Numeric(
            "relative error undefined: reference sequence is identically zero".into(),
        ));
    }
    Ok(y.iter()
        .zip(y_hat)
        .map(|(a, b)| 100.0 * (a - b).abs() / norm)
        .collect())
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_reference_values() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        let v = rmse(&[3.0, 4.0], &[0.0, 0.0]).unwrap();
        assert!((v - 12.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn max_abs_error_reference_values() {
        assert_eq!(max_abs_error(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(max_abs_error(&[1.0, 2.0, 3.0], &[1.0, 0.0, 3.0]).unwrap(), 2.0);
        assert_eq!(max_abs_error(&[-5.0], &[1.5]).unwrap(), 6.5);
    }

    #[test]
    fn relative_error_uses_global_max_normalization() {
        let series = relative_error_series(&[10.0, 5.0], &[9.0, 5.0]).unwrap();
        assert_eq!(series, vec![10.0, 0.0]);

        // A case where global-max and per-sample normalization disagree:
        // the per-sample mutant MUST NOT reproduce these values.
        let y = [10.0, 5.0];
        let y_hat = [9.0, 4.5];
        let series = relative_error_series(&y, &y_hat).unwrap();
        assert_eq!(series, vec![10.0, 5.0]);
        let per_sample_mutant: Vec<f64> = y
            .iter()
            .zip(&y_hat)
            .map(|(a, b)| 100.0 * (a - b).abs() / a.abs())
            .collect();
        assert_ne!(series, per_sample_mutant);
        assert_eq!(per_sample_mutant, vec![10.0, 10.0]);
    }

    #[test]
    fn identical_sequences_have_zero_relative_error() {
        let series = relative_error_series(&[1.0, -2.0, 3.0], &[1.0, -2.0, 3.0]).unwrap();
        assert!(series.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_reference_rejected() {
        assert!(relative_error_series(&[0.0, 0.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn length_mismatch_and_empty_rejected() {
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(rmse(&[], &[]).is_err());
        assert!(max_abs_error(&[1.0], &[]).is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
