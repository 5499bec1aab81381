//! Bias-free dense layers used by the decoder branches.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::nn::activation::elu_unit_deriv_from_output;
use crate::nn::linalg::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DenseActivation {
    Elu,
    Linear,
}

/// `y = act(W x)`, no bias: the target signals are zero at rest, so static
/// offsets are not modeled anywhere in the network.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub w: Mat,
    pub activation: DenseActivation,
}

impl DenseLayer {
    pub fn zeros(input_dim: usize, output_dim: usize, activation: DenseActivation) -> Self {
        Self {
            w: Mat::zeros(output_dim, input_dim),
            activation,
        }
    }

    pub fn init_uniform(
        input_dim: usize,
        output_dim: usize,
        activation: DenseActivation,
        rng: &mut impl Rng,
    ) -> Self {
        let bound = (1.0 / input_dim as f64).sqrt();
        Self {
            w: Mat::from_fn(output_dim, input_dim, |_, _| rng.gen_range(-bound..bound)),
            activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w.rows()
    }

    /// Forward pass; output doubles as the activation cache.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.output_dim()];
        self.w.matvec(x, &mut y);
        if self.activation == DenseActivation::Elu {
            for v in &mut y {
                *v = crate::nn::activation::elu(*v, 1.0);
            }
        }
        y
    }

    /// Reverse pass given the cached input and output.
    /// Returns the weight gradient and dL/dx.
    pub fn backward(&self, x: &[f64], y: &[f64], dy: &[f64]) -> (Mat, Vec<f64>) {
        let mut dpre: Vec<f64> = dy.to_vec();
        if self.activation == DenseActivation::Elu {
            for (g, out) in dpre.iter_mut().zip(y) {
                *g *= elu_unit_deriv_from_output(*out);
            }
        }
        let mut dw = Mat::zeros(self.output_dim(), self.input_dim());
        dw.outer_acc(&dpre, x);
        let mut dx = vec![0.0; self.input_dim()];
        self.w.matvec_t_acc(&dpre, &mut dx);
        (dw, dx)
    }
}
