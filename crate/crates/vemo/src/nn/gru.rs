//! Gated recurrent unit layer: exact forward pass and backpropagation
//! through time.
//!
//! The recurrence, starting from `h_0 = 0`:
//!
//! ```text
//! z_t = g(W_z x_t + U_z h_{t-1})
//! r_t = g(W_r x_t + U_r h_{t-1})
//! c_t = phi(W_h x_t + U_h (r_t . h_{t-1}))
//! h_t = (1 - z_t) . h_{t-1} + z_t . c_t
//! ```
//!
//! where `g` is the gate activation (logistic: the gates live in (0,1) so
//! the update stays a convex combination), `phi` the candidate activation
//! (tanh canonically, ELU in encoder layers), `.` the element-wise product,
//! and no bias vectors exist anywhere.

use rand::Rng;

use crate::nn::activation::{CandidateActivation, GateActivation};
use crate::nn::linalg::Mat;
use crate::{Error, Result};

/// Learned parameters of one GRU layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GruLayerParams {
    /// Input weights, `hidden x input`.
    pub w_z: Mat,
    pub w_r: Mat,
    pub w_h: Mat,
    /// Recurrent weights, `hidden x hidden`.
    pub u_z: Mat,
    pub u_r: Mat,
    pub u_h: Mat,
    pub gate_activation: GateActivation,
    pub candidate_activation: CandidateActivation,
}

impl GruLayerParams {
    pub fn zeros(
        input_dim: usize,
        hidden_dim: usize,
        gate_activation: GateActivation,
        candidate_activation: CandidateActivation,
    ) -> Self {
        Self {
            w_z: Mat::zeros(hidden_dim, input_dim),
            w_r: Mat::zeros(hidden_dim, input_dim),
            w_h: Mat::zeros(hidden_dim, input_dim),
            u_z: Mat::zeros(hidden_dim, hidden_dim),
            u_r: Mat::zeros(hidden_dim, hidden_dim),
            u_h: Mat::zeros(hidden_dim, hidden_dim),
            gate_activation,
            candidate_activation,
        }
    }

    /// Seeded uniform init in `+-sqrt(1/fan_in)` per matrix.
    pub fn init_uniform(
        input_dim: usize,
        hidden_dim: usize,
        gate_activation: GateActivation,
        candidate_activation: CandidateActivation,
        rng: &mut impl Rng,
    ) -> Self {
        let mut layer = Self::zeros(input_dim, hidden_dim, gate_activation, candidate_activation);
        for (mat, fan_in) in [
            (&mut layer.w_z, input_dim),
            (&mut layer.w_r, input_dim),
            (&mut layer.w_h, input_dim),
            (&mut layer.u_z, hidden_dim),
            (&mut layer.u_r, hidden_dim),
            (&mut layer.u_h, hidden_dim),
        ] {
            let bound = (1.0 / fan_in as f64).sqrt();
            for v in mat.data_mut() {
                *v = rng.gen_range(-bound..bound);
            }
        }
        layer
    }

    pub fn input_dim(&self) -> usize {
        self.w_z.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_z.rows()
    }

    fn check_shapes(&self) -> Result<()> {
        let (f, d) = (self.hidden_dim(), self.input_dim());
        for (name, m, rows, cols) in [
            ("w_r", &self.w_r, f, d),
            ("w_h", &self.w_h, f, d),
            ("u_z", &self.u_z, f, f),
            ("u_r", &self.u_r, f, f),
            ("u_h", &self.u_h, f, f),
        ] {
            if m.rows() != rows || m.cols() != cols {
                return Err(Error::Config(format!(
                    "GRU matrix {name} has shape {}x{}, expected {rows}x{cols}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        Ok(())
    }
}

/// Per-timestep activations cached by the forward pass for BPTT.
///
/// Exactly `k` steps of `(x_t, z_t, r_t, c_t, h_t)`; nothing else is stored.
#[derive(Debug, Clone)]
pub struct GruTrace {
    k: usize,
    input_dim: usize,
    hidden_dim: usize,
    x: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    candidate: Vec<f64>,
    h: Vec<f64>,
}

impl GruTrace {
    pub fn steps(&self) -> usize {
        self.k
    }

    /// Total cached floats; exactly `k * (input_dim + 4 * hidden_dim)`.
    pub fn cached_len(&self) -> usize {
        self.x.len() + self.z.len() + self.r.len() + self.candidate.len() + self.h.len()
    }

    fn assert_sizes(&self) {
        assert_eq!(self.x.len(), self.k * self.input_dim);
        assert_eq!(self.z.len(), self.k * self.hidden_dim);
        assert_eq!(self.r.len(), self.k * self.hidden_dim);
        assert_eq!(self.candidate.len(), self.k * self.hidden_dim);
        assert_eq!(self.h.len(), self.k * self.hidden_dim);
    }

    fn h_at(&self, t: usize) -> &[f64] {
        &self.h[t * self.hidden_dim..(t + 1) * self.hidden_dim]
    }
}

/// Run the recurrence over `inputs` (flat, `k` rows of `input_dim`).
///
/// Returns the full hidden sequence when `return_sequence` is set, otherwise
/// only the final hidden state, plus the trace needed by [`gru_backward`].
pub fn gru_forward(
    layer: &GruLayerParams,
    inputs: &[f64],
    return_sequence: bool,
) -> Result<(Vec<f64>, GruTrace)> {
    layer.check_shapes()?;
    let d = layer.input_dim();
    let f = layer.hidden_dim();
    if d == 0 || inputs.len() % d != 0 {
        return Err(Error::Config(format!(
            "input buffer of {} values is not a whole number of {d}-dim steps",
            inputs.len()
        )));
    }
    let k = inputs.len() / d;

    let mut trace = GruTrace {
        k,
        input_dim: d,
        hidden_dim: f,
        x: inputs.to_vec(),
        z: vec![0.0; k * f],
        r: vec![0.0; k * f],
        candidate: vec![0.0; k * f],
        h: vec![0.0; k * f],
    };

    let mut h_prev = vec![0.0; f];
    let mut az = vec![0.0; f];
    let mut ar = vec![0.0; f];
    let mut ah = vec![0.0; f];
    let mut gated = vec![0.0; f];
    let gate = layer.gate_activation;
    let cand = layer.candidate_activation;

    for t in 0..k {
        let x_t = &inputs[t * d..(t + 1) * d];
        layer.w_z.matvec(x_t, &mut az);
        layer.u_z.matvec_acc(&h_prev, &mut az);
        layer.w_r.matvec(x_t, &mut ar);
        layer.u_r.matvec_acc(&h_prev, &mut ar);

        let z_t = &mut trace.z[t * f..(t + 1) * f];
        let r_t = &mut trace.r[t * f..(t + 1) * f];
        for i in 0..f {
            z_t[i] = gate.apply(az[i]);
            r_t[i] = gate.apply(ar[i]);
            gated[i] = r_t[i] * h_prev[i];
        }

        layer.w_h.matvec(x_t, &mut ah);
        layer.u_h.matvec_acc(&gated, &mut ah);
        let c_t = &mut trace.candidate[t * f..(t + 1) * f];
        let h_t = &mut trace.h[t * f..(t + 1) * f];
        for i in 0..f {
            c_t[i] = cand.apply(ah[i]);
            h_t[i] = (1.0 - z_t[i]) * h_prev[i] + z_t[i] * c_t[i];
        }
        h_prev.copy_from_slice(h_t);
    }

    trace.assert_sizes();
    let outputs = if return_sequence {
        trace.h.clone()
    } else {
        h_prev
    };
    Ok((outputs, trace))
}

/// Exact reverse-mode pass through the recurrence.
///
/// `upstream` holds dL/dh for every step (flat `k x hidden`); callers that
/// only consumed the final state put its gradient in the last row and zeros
/// elsewhere. Returns the six parameter gradients and dL/dx per step.
pub fn gru_backward(
    layer: &GruLayerParams,
    trace: &GruTrace,
    upstream: &[f64],
) -> Result<(GruLayerParams, Vec<f64>)> {
    layer.check_shapes()?;
    let d = layer.input_dim();
    let f = layer.hidden_dim();
    if trace.input_dim != d || trace.hidden_dim != f {
        return Err(Error::Config(format!(
            "trace shape ({}, {}) does not match layer ({d}, {f})",
            trace.input_dim, trace.hidden_dim
        )));
    }
    let k = trace.k;
    if upstream.len() != k * f {
        return Err(Error::Config(format!(
            "upstream gradient has {} values, expected k*hidden = {}",
            upstream.len(),
            k * f
        )));
    }

    let mut grads =
        GruLayerParams::zeros(d, f, layer.gate_activation, layer.candidate_activation);
    let mut input_grads = vec![0.0; k * d];
    // dL/dh_t accumulated from future steps.
    let mut carry = vec![0.0; f];
    let mut gh = vec![0.0; f];
    let mut daz = vec![0.0; f];
    let mut dar = vec![0.0; f];
    let mut dah = vec![0.0; f];
    let mut gated = vec![0.0; f];
    let mut t1 = vec![0.0; f];
    let zeros = vec![0.0; f];
    let gate = layer.gate_activation;
    let cand = layer.candidate_activation;

    for t in (0..k).rev() {
        let h_prev = if t == 0 { &zeros[..] } else { trace.h_at(t - 1) };
        let x_t = &trace.x[t * d..(t + 1) * d];
        let z_t = &trace.z[t * f..(t + 1) * f];
        let r_t = &trace.r[t * f..(t + 1) * f];
        let c_t = &trace.candidate[t * f..(t + 1) * f];

        for i in 0..f {
            gh[i] = upstream[t * f + i] + carry[i];
        }

        // Gate and candidate pre-activation gradients.
        for i in 0..f {
            let dz = gh[i] * (c_t[i] - h_prev[i]);
            daz[i] = dz * gate.deriv_from_output(z_t[i]);
            let dc = gh[i] * z_t[i];
            dah[i] = dc * cand.deriv_from_output(c_t[i]);
            // Direct path to the previous hidden state.
            carry[i] = gh[i] * (1.0 - z_t[i]);
            gated[i] = r_t[i] * h_prev[i];
        }

        grads.w_h.outer_acc(&dah, x_t);
        grads.u_h.outer_acc(&dah, &gated);
        t1.fill(0.0);
        layer.u_h.matvec_t_acc(&dah, &mut t1);
        for i in 0..f {
            let dr = t1[i] * h_prev[i];
            dar[i] = dr * gate.deriv_from_output(r_t[i]);
            carry[i] += t1[i] * r_t[i];
        }

        grads.w_z.outer_acc(&daz, x_t);
        grads.u_z.outer_acc(&daz, h_prev);
        layer.u_z.matvec_t_acc(&daz, &mut carry);

        grads.w_r.outer_acc(&dar, x_t);
        grads.u_r.outer_acc(&dar, h_prev);
        layer.u_r.matvec_t_acc(&dar, &mut carry);

        let dx = &mut input_grads[t * d..(t + 1) * d];
        layer.w_z.matvec_t_acc(&daz, dx);
        layer.w_r.matvec_t_acc(&dar, dx);
        layer.w_h.matvec_t_acc(&dah, dx);
    }

    Ok((grads, input_grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_layer(
        d: usize,
        f: usize,
        gate: GateActivation,
        cand: CandidateActivation,
        rng: &mut impl Rng,
    ) -> GruLayerParams {
        GruLayerParams::init_uniform(d, f, gate, cand, rng)
    }

    /// Independent scalar translation of the four recurrence equations,
    /// nested index loops only.
    fn naive_forward(layer: &GruLayerParams, inputs: &[f64], k: usize) -> Vec<Vec<f64>> {
        let d = layer.input_dim();
        let f = layer.hidden_dim();
        let g = |x: f64| match layer.gate_activation {
            GateActivation::Logistic => 1.0 / (1.0 + (-x).exp()),
            GateActivation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp() - 1.0
                }
            }
        };
        let phi = |x: f64| match layer.candidate_activation {
            CandidateActivation::Tanh => x.tanh(),
            CandidateActivation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp() - 1.0
                }
            }
        };
        let mut h = vec![0.0; f];
        let mut out = Vec::new();
        for t in 0..k {
            let x: Vec<f64> = (0..d).map(|j| inputs[t * d + j]).collect();
            let mut z = vec![0.0; f];
            let mut r = vec![0.0; f];
            for i in 0..f {
                let mut az = 0.0;
                let mut ar = 0.0;
                for j in 0..d {
                    az += layer.w_z.get(i, j) * x[j];
                    ar += layer.w_r.get(i, j) * x[j];
                }
                for j in 0..f {
                    az += layer.u_z.get(i, j) * h[j];
                    ar += layer.u_r.get(i, j) * h[j];
                }
                z[i] = g(az);
                r[i] = g(ar);
            }
            let mut h_next = vec![0.0; f];
            for i in 0..f {
                let mut ah = 0.0;
                for j in 0..d {
                    ah += layer.w_h.get(i, j) * x[j];
                }
                for j in 0..f {
                    ah += layer.u_h.get(i, j) * (r[j] * h[j]);
                }
                let c = phi(ah);
                h_next[i] = (1.0 - z[i]) * h[i] + z[i] * c;
            }
            h = h_next;
            out.push(h.clone());
        }
        out
    }

    #[test]
    fn zero_weights_logistic_keeps_hidden_at_zero() {
        let layer =
            GruLayerParams::zeros(2, 3, GateActivation::Logistic, CandidateActivation::Tanh);
        let inputs = vec![0.7, -0.4, 1.2, 0.1, -0.9, 0.3];
        let (seq, _) = gru_forward(&layer, &inputs, true).unwrap();
        assert!(seq.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_input_returns_initial_state() {
        let layer =
            GruLayerParams::zeros(2, 3, GateActivation::Logistic, CandidateActivation::Tanh);
        let (out, trace) = gru_forward(&layer, &[], false).unwrap();
        assert_eq!(out, vec![0.0; 3]);
        assert_eq!(trace.steps(), 0);
    }

    #[test]
    fn matches_naive_loop_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for (gate, cand) in [
            (GateActivation::Logistic, CandidateActivation::Tanh),
            (GateActivation::Logistic, CandidateActivation::Elu),
            (GateActivation::Elu, CandidateActivation::Tanh),
        ] {
            let layer = random_layer(2, 3, gate, cand, &mut rng);
            let k = 4;
            let inputs: Vec<f64> = (0..k * 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (seq, _) = gru_forward(&layer, &inputs, true).unwrap();
            let expect = naive_forward(&layer, &inputs, k);
            for t in 0..k {
                for i in 0..3 {
                    assert!(
                        (seq[t * 3 + i] - expect[t][i]).abs() <= 1e-12,
                        "t={t} i={i}: {} vs {}",
                        seq[t * 3 + i],
                        expect[t][i]
                    );
                }
            }
        }
    }

    #[test]
    fn prefix_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let layer = random_layer(3, 4, GateActivation::Logistic, CandidateActivation::Elu, &mut rng);
        let k = 9;
        let inputs: Vec<f64> = (0..k * 3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (full, _) = gru_forward(&layer, &inputs, true).unwrap();
        for prefix in 1..k {
            let (part, _) = gru_forward(&layer, &inputs[..prefix * 3], true).unwrap();
            assert_eq!(part, full[..prefix * 4].to_vec(), "prefix {prefix}");
        }
    }

    #[test]
    fn last_state_equals_sequence_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let layer = random_layer(3, 5, GateActivation::Logistic, CandidateActivation::Tanh, &mut rng);
        let inputs: Vec<f64> = (0..7 * 3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (seq, _) = gru_forward(&layer, &inputs, true).unwrap();
        let (last, _) = gru_forward(&layer, &inputs, false).unwrap();
        assert_eq!(last.as_slice(), &seq[6 * 5..]);
    }

    #[test]
    fn trace_caches_exactly_k_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let layer = random_layer(2, 3, GateActivation::Logistic, CandidateActivation::Elu, &mut rng);
        for k in [1usize, 4, 11] {
            let inputs: Vec<f64> = (0..k * 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (_, trace) = gru_forward(&layer, &inputs, true).unwrap();
            assert_eq!(trace.steps(), k);
            assert_eq!(trace.cached_len(), k * (2 + 4 * 3));
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let layer =
            random_layer(2, 3, GateActivation::Logistic, CandidateActivation::Tanh, &mut rng);
        let inputs: Vec<f64> = (0..5 * 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, trace) = gru_forward(&layer, &inputs, true).unwrap();
        let (grads, dx) = gru_backward(&layer, &trace, &vec![0.0; 5 * 3]).unwrap();
        for m in [&grads.w_z, &grads.w_r, &grads.w_h, &grads.u_z, &grads.u_r, &grads.u_h] {
            assert!(m.data().iter().all(|&v| v == 0.0));
        }
        assert!(dx.iter().all(|&v| v == 0.0));
    }

    /// Scalar loss `L = sum w . h_seq` so upstream gradients are just `w`.
    fn loss_of(layer: &GruLayerParams, inputs: &[f64], weights: &[f64]) -> f64 {
        let (seq, _) = gru_forward(layer, inputs, true).unwrap();
        seq.iter().zip(weights).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn gradients_match_central_finite_differences() {
        let (d, f, k) = (2usize, 3usize, 5usize);
        let h = 1e-5;
        let tol = 1e-5;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (gate, cand) = match seed % 3 {
                0 => (GateActivation::Logistic, CandidateActivation::Tanh),
                1 => (GateActivation::Logistic, CandidateActivation::Elu),
                _ => (GateActivation::Elu, CandidateActivation::Tanh),
            };
            let layer = random_layer(d, f, gate, cand, &mut rng);
            let inputs: Vec<f64> = (0..k * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let weights: Vec<f64> = (0..k * f).map(|_| rng.gen_range(-1.0..1.0)).collect();

            let (_, trace) = gru_forward(&layer, &inputs, true).unwrap();
            let (grads, input_grads) = gru_backward(&layer, &trace, &weights).unwrap();

            let mats = |l: &GruLayerParams| {
                [
                    l.w_z.clone(),
                    l.w_r.clone(),
                    l.w_h.clone(),
                    l.u_z.clone(),
                    l.u_r.clone(),
                    l.u_h.clone(),
                ]
            };
            let analytic = mats(&grads);
            for m_idx in 0..6 {
                let len = analytic[m_idx].data().len();
                for e in 0..len {
                    let probe = |delta: f64| {
                        let mut pert = layer.clone();
                        let target = match m_idx {
                            0 => &mut pert.w_z,
                            1 => &mut pert.w_r,
                            2 => &mut pert.w_h,
                            3 => &mut pert.u_z,
                            4 => &mut pert.u_r,
                            _ => &mut pert.u_h,
                        };
                        target.data_mut()[e] += delta;
                        loss_of(&pert, &inputs, &weights)
                    };
                    let fd = (probe(h) - probe(-h)) / (2.0 * h);
                    let an = analytic[m_idx].data()[e];
                    let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-6);
                    assert!(rel <= tol, "seed {seed} mat {m_idx} elem {e}: {an} vs {fd}");
                }
            }

            for e in 0..inputs.len() {
                let probe = |delta: f64| {
                    let mut pert = inputs.clone();
                    pert[e] += delta;
                    loss_of(&layer, &pert, &weights)
                };
                let fd = (probe(h) - probe(-h)) / (2.0 * h);
                let an = input_grads[e];
                let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-6);
                assert!(rel <= tol, "seed {seed} input {e}: {an} vs {fd}");
            }
        }
    }
}
