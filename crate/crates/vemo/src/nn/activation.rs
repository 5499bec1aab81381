//! Activation functions and their derivatives.

use serde::{Deserialize, Serialize};

/// Exponential linear unit: `x` for `x > 0`, `alpha (e^x - 1)` for `x <= 0`.
/// Continuous at the origin.
pub fn elu(x: f64, alpha: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        alpha * (x.exp() - 1.0)
    }
}

/// Derivative of [`elu`]: 1 for `x > 0`, `alpha e^x` for `x <= 0`.
pub fn elu_deriv(x: f64, alpha: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        alpha * x.exp()
    }
}

/// ELU derivative recovered from the activation's own output, valid for the
/// unit-alpha case used inside the network: `y > 0 -> 1`, else `y + 1`.
pub(crate) fn elu_unit_deriv_from_output(y: f64) -> f64 {
    if y > 0.0 {
        1.0
    } else {
        y + 1.0
    }
}

pub(crate) fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Gate nonlinearity of a GRU layer.
///
/// The gates must map into (0, 1) so the state update stays a convex
/// combination; anything with unbounded range turns the 100-step recurrence
/// into a geometric blowup on slowly varying inputs. The ELU variant is kept
/// for small-scale experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateActivation {
    Logistic,
    Elu,
}

impl GateActivation {
    pub(crate) fn apply(self, x: f64) -> f64 {
        match self {
            GateActivation::Logistic => logistic(x),
            GateActivation::Elu => elu(x, 1.0),
        }
    }

    /// Derivative expressed through the gate output.
    pub(crate) fn deriv_from_output(self, y: f64) -> f64 {
        match self {
            GateActivation::Logistic => y * (1.0 - y),
            GateActivation::Elu => elu_unit_deriv_from_output(y),
        }
    }
}

/// Candidate nonlinearity of a GRU layer: tanh in the canonical recurrence,
/// unit-alpha ELU in the encoder layers (the noise-robustness substitution).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CandidateActivation {
    Tanh,
    Elu,
}

impl CandidateActivation {
    pub(crate) fn apply(self, x: f64) -> f64 {
        match self {
            CandidateActivation::Tanh => x.tanh(),
            CandidateActivation::Elu => elu(x, 1.0),
        }
    }

    /// Derivative expressed through the candidate output.
    pub(crate) fn deriv_from_output(self, y: f64) -> f64 {
        match self {
            CandidateActivation::Tanh => 1.0 - y * y,
            CandidateActivation::Elu => elu_unit_deriv_from_output(y),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elu_reference_points() {
        assert_eq!(elu(0.0, 1.0), 0.0);
        assert_eq!(elu(3.0, 1.0), 3.0);
        let v = elu(-10.0, 1.0);
        assert!((v - ((-10.0f64).exp() - 1.0)).abs() < 1e-15);
        assert!((v + 0.9999546).abs() < 1e-7);
        // Approaches -alpha (e^-40 is below one ulp of 1, so this rounds to
        // exactly -alpha).
        assert!(elu(-40.0, 1.3) >= -1.3);
        assert!((elu(-40.0, 1.3) + 1.3).abs() < 1e-12);
        assert!(elu(-5.0, 1.3) > -1.3);
    }

    #[test]
    fn elu_continuous_at_origin() {
        let eps = 1e-12;
        assert!((elu(eps, 1.0) - elu(-eps, 1.0)).abs() < 1e-11);
    }

    #[test]
    fn elu_derivative_matches_finite_differences() {
        let h = 1e-7;
        for &alpha in &[0.5, 1.0, 2.0] {
            for &x in &[-3.0, -0.5, 0.4, 2.0] {
                let fd = (elu(x + h, alpha) - elu(x - h, alpha)) / (2.0 * h);
                assert!((elu_deriv(x, alpha) - fd).abs() < 1e-6, "x={x} alpha={alpha}");
            }
        }
    }

    #[test]
    fn gate_derivatives_from_output() {
        for &x in &[-2.0, -0.3, 0.0, 0.7, 3.0] {
            let y = GateActivation::Logistic.apply(x);
            let expect = logistic(x) * (1.0 - logistic(x));
            assert!((GateActivation::Logistic.deriv_from_output(y) - expect).abs() < 1e-15);

            let y = GateActivation::Elu.apply(x);
            assert!((GateActivation::Elu.deriv_from_output(y) - elu_deriv(x, 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn candidate_derivatives_from_output() {
        for &x in &[-2.0, -0.3, 0.0, 0.7, 3.0] {
            let y = CandidateActivation::Tanh.apply(x);
            let expect = 1.0 - x.tanh() * x.tanh();
            assert!((CandidateActivation::Tanh.deriv_from_output(y) - expect).abs() < 1e-15);

            let y = CandidateActivation::Elu.apply(x);
            assert!(
                (CandidateActivation::Elu.deriv_from_output(y) - elu_deriv(x, 1.0)).abs() < 1e-15
            );
        }
    }
}
