//! The full network: shared bottleneck GRU encoder, four dedicated decoder
//! branches, MAE loss with exact gradients.
//!
//! Every window of `k` scaled records (8 channels) flows through the encoder
//! stack; all layers except the last return their full hidden sequence to
//! the next layer, the last returns only its final hidden state. That latent
//! vector feeds each branch, which decodes one scaled state channel. Output
//! order is `(a_x, a_y, yaw_rate, v_x)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::nn::activation::{CandidateActivation, GateActivation};
use crate::nn::dense::{DenseActivation, DenseLayer};
use crate::nn::gru::{gru_backward, gru_forward, GruLayerParams};
use crate::nn::linalg::Mat;
use crate::{Error, Result};

/// Decoder branch names in output order.
pub const STATE_NAMES: [&str; 4] = ["a_x", "a_y", "yaw_rate", "v_x"];

/// Number of input channels per timestep.
const INPUT_CHANNELS: usize = 8;

/// Network width configuration. The topology (shared encoder, four branches)
/// is fixed; the widths are not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchConfig {
    /// Hidden width of each encoder GRU layer, in order.
    pub encoder_widths: Vec<usize>,
    /// Hidden widths of every decoder branch before the scalar output layer.
    pub branch_hidden: Vec<usize>,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            encoder_widths: vec![32, 32],
            branch_hidden: vec![16],
        }
    }
}

impl ArchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.encoder_widths.is_empty() {
            return Err(Error::Config("encoder needs at least one GRU layer".into()));
        }
        for w in self.encoder_widths.iter().chain(&self.branch_hidden) {
            if *w == 0 {
                return Err(Error::Config("layer widths must be at least 1".into()));
            }
        }
        Ok(())
    }
}

/// One decoder branch: ELU hidden layers, linear scalar output.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchParams {
    pub layers: Vec<DenseLayer>,
}

/// All learned weights of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct VemoParams {
    pub encoder: Vec<GruLayerParams>,
    pub branches: [BranchParams; 4],
}

impl VemoParams {
    /// Seeded initialization: uniform `+-sqrt(1/fan_in)` everywhere, logistic
    /// gates with ELU candidate activations in the encoder, no biases.
    pub fn init(arch: &ArchConfig, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut encoder = Vec::with_capacity(arch.encoder_widths.len());
        let mut dim = INPUT_CHANNELS;
        for &width in &arch.encoder_widths {
            encoder.push(GruLayerParams::init_uniform(
                dim,
                width,
                GateActivation::Logistic,
                CandidateActivation::Elu,
                &mut rng,
            ));
            dim = width;
        }
        let latent = dim;
        let branches = std::array::from_fn(|_| {
            let mut layers = Vec::with_capacity(arch.branch_hidden.len() + 1);
            let mut d = latent;
            for &width in &arch.branch_hidden {
                layers.push(DenseLayer::init_uniform(
                    d,
                    width,
                    DenseActivation::Elu,
                    &mut rng,
                ));
                d = width;
            }
            layers.push(DenseLayer::init_uniform(
                d,
                1,
                DenseActivation::Linear,
                &mut rng,
            ));
            BranchParams { layers }
        });
        Ok(Self { encoder, branches })
    }

    /// Latent width produced by the encoder bottleneck.
    pub fn latent_dim(&self) -> usize {
        self.encoder.last().expect("non-empty encoder").hidden_dim()
    }

    /// Structural validation: four branches, chained dimensions.
    pub fn validate(&self) -> Result<()> {
        if self.encoder.is_empty() {
            return Err(Error::Config("encoder has no layers".into()));
        }
        if self.encoder[0].input_dim() != INPUT_CHANNELS {
            return Err(Error::Config(format!(
                "first encoder layer consumes {} channels, expected {INPUT_CHANNELS}",
                self.encoder[0].input_dim()
            )));
        }
        for pair in self.encoder.windows(2) {
            if pair[1].input_dim() != pair[0].hidden_dim() {
                return Err(Error::Config(
                    "encoder layer dimensions do not chain".into(),
                ));
            }
        }
        let latent = self.latent_dim();
        for (b, branch) in self.branches.iter().enumerate() {
            let mut d = latent;
            if branch.layers.is_empty() {
                return Err(Error::Config(format!("branch {b} has no layers")));
            }
            for layer in &branch.layers {
                if layer.input_dim() != d {
                    return Err(Error::Config(format!(
                        "branch {b} layer dimensions do not chain"
                    )));
                }
                d = layer.output_dim();
            }
            if d != 1 {
                return Err(Error::Config(format!(
                    "branch {b} must end in a scalar output, ends in {d}"
                )));
            }
        }
        Ok(())
    }

    /// Recover the width configuration.
    pub fn arch(&self) -> ArchConfig {
        ArchConfig {
            encoder_widths: self.encoder.iter().map(|l| l.hidden_dim()).collect(),
            branch_hidden: self.branches[0]
                .layers
                .iter()
                .take(self.branches[0].layers.len() - 1)
                .map(|l| l.output_dim())
                .collect(),
        }
    }

    /// All parameter tensors in canonical order: per encoder layer
    /// `w_z, w_r, w_h, u_z, u_r, u_h`, then per branch its dense weights.
    pub fn tensors(&self) -> Vec<&Mat> {
        let mut out = Vec::new();
        for layer in &self.encoder {
            out.extend([&layer.w_z, &layer.w_r, &layer.w_h, &layer.u_z, &layer.u_r, &layer.u_h]);
        }
        for branch in &self.branches {
            for layer in &branch.layers {
                out.push(&layer.w);
            }
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Mat> {
        let mut out: Vec<&mut Mat> = Vec::new();
        for layer in &mut self.encoder {
            out.push(&mut layer.w_z);
            out.push(&mut layer.w_r);
            out.push(&mut layer.w_h);
            out.push(&mut layer.u_z);
            out.push(&mut layer.u_r);
            out.push(&mut layer.u_h);
        }
        for branch in &mut self.branches {
            for layer in &mut branch.layers {
                out.push(&mut layer.w);
            }
        }
        out
    }

    /// Diagnostic names parallel to [`Self::tensors`].
    pub fn tensor_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, _) in self.encoder.iter().enumerate() {
            for name in ["w_z", "w_r", "w_h", "u_z", "u_r", "u_h"] {
                out.push(format!("encoder.{i}.{name}"));
            }
        }
        for (b, branch) in self.branches.iter().enumerate() {
            for (l, _) in branch.layers.iter().enumerate() {
                out.push(format!("branch.{}.{l}.w", STATE_NAMES[b]));
            }
        }
        out
    }
}

/// Flat gradient container, tensor-for-tensor parallel to
/// [`VemoParams::tensors`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub mats: Vec<Mat>,
}

impl GradientSet {
    pub fn zeros_like(params: &VemoParams) -> Self {
        Self {
            mats: params
                .tensors()
                .iter()
                .map(|m| Mat::zeros(m.rows(), m.cols()))
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &GradientSet) {
        assert_eq!(self.mats.len(), other.mats.len());
        for (a, b) in self.mats.iter_mut().zip(&other.mats) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for m in &mut self.mats {
            m.scale(s);
        }
    }

    /// Euclidean norm over every element of every tensor.
    pub fn global_norm(&self) -> f64 {
        self.mats.iter().map(Mat::sum_of_squares).sum::<f64>().sqrt()
    }
}

fn check_window(window: &[f64]) -> Result<usize> {
    if window.is_empty() || window.len() % INPUT_CHANNELS != 0 {
        return Err(Error::Config(format!(
            "window of {} values is not a non-empty multiple of {INPUT_CHANNELS} channels",
            window.len()
        )));
    }
    Ok(window.len() / INPUT_CHANNELS)
}

/// One-step prediction: scaled window in, scaled `(a_x, a_y, yaw_rate, v_x)`
/// out.
pub fn vemo_forward(params: &VemoParams, window: &[f64]) -> Result<[f64; 4]> {
    params.validate()?;
    check_window(window)?;

    let mut seq = window.to_vec();
    let last = params.encoder.len() - 1;
    for (i, layer) in params.encoder.iter().enumerate() {
        let (out, _) = gru_forward(layer, &seq, i != last)?;
        seq = out;
    }
    let latent = seq;

    let mut out = [0.0; 4];
    for (b, branch) in params.branches.iter().enumerate() {
        let mut x = latent.clone();
        for layer in &branch.layers {
            x = layer.forward(&x);
        }
        out[b] = x[0];
    }
    Ok(out)
}

/// Mean absolute error over the four channels and its full gradient set.
///
/// The subgradient at an exact tie is zero. Gradients from all four branches
/// flow into the shared encoder and are summed there.
pub fn vemo_backward(
    params: &VemoParams,
    window: &[f64],
    target: &[f64; 4],
) -> Result<(f64, GradientSet)> {
    params.validate()?;
    check_window(window)?;

    // Forward with caches.
    let last = params.encoder.len() - 1;
    let mut seq = window.to_vec();
    let mut traces = Vec::with_capacity(params.encoder.len());
    for (i, layer) in params.encoder.iter().enumerate() {
        let (out, trace) = gru_forward(layer, &seq, i != last)?;
        traces.push(trace);
        seq = out;
    }
    let latent = seq;

    let mut branch_inputs: [Vec<Vec<f64>>; 4] = std::array::from_fn(|_| Vec::new());
    let mut branch_outputs: [Vec<Vec<f64>>; 4] = std::array::from_fn(|_| Vec::new());
    let mut pred = [0.0; 4];
    for (b, branch) in params.branches.iter().enumerate() {
        let mut x = latent.clone();
        for layer in &branch.layers {
            let y = layer.forward(&x);
            branch_inputs[b].push(x);
            branch_outputs[b].push(y.clone());
            x = y;
        }
        pred[b] = x[0];
    }

    let loss = pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / 4.0;

    // MAE subgradient per channel; 0 at exact ties.
    let mut grads = GradientSet::zeros_like(params);
    let n_encoder_tensors = params.encoder.len() * 6;
    let mut d_latent = vec![0.0; params.latent_dim()];
    let mut tensor_idx = n_encoder_tensors;
    for (b, branch) in params.branches.iter().enumerate() {
        let residual = pred[b] - target[b];
        let dout = if residual > 0.0 {
            0.25
        } else if residual < 0.0 {
            -0.25
        } else {
            0.0
        };
        let mut dy = vec![dout];
        for (l, layer) in branch.layers.iter().enumerate().rev() {
            let (dw, dx) = layer.backward(&branch_inputs[b][l], &branch_outputs[b][l], &dy);
            grads.mats[tensor_idx + l].add_assign(&dw);
            dy = dx;
        }
        tensor_idx += branch.layers.len();
        for (acc, g) in d_latent.iter_mut().zip(&dy) {
            *acc += g;
        }
    }

    // Encoder: the bottleneck layer only exposes its final hidden state.
    let k = window.len() / INPUT_CHANNELS;
    let mut upstream = vec![0.0; k * params.latent_dim()];
    upstream[(k - 1) * params.latent_dim()..].copy_from_slice(&d_latent);
    for (i, layer) in params.encoder.iter().enumerate().rev() {
        let (layer_grads, input_grads) = gru_backward(layer, &traces[i], &upstream)?;
        let base = i * 6;
        for (offset, g) in [
            layer_grads.w_z,
            layer_grads.w_r,
            layer_grads.w_h,
            layer_grads.u_z,
            layer_grads.u_r,
            layer_grads.u_h,
        ]
        .into_iter()
        .enumerate()
        {
            grads.mats[base + offset].add_assign(&g);
        }
        upstream = input_grads;
    }

    Ok((loss, grads))
}
