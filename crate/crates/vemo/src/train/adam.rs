//! Bias-corrected Adam update over the flat tensor set.

use crate::nn::{GradientSet, VemoParams};
use crate::train::TrainConfig;
use crate::{Error, Result};

/// Mutable optimizer state: parameters plus first/second moment accumulators
/// congruent with them.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub params: VemoParams,
    m: GradientSet,
    v: GradientSet,
    step: u64,
}

impl TrainState {
    pub fn new(params: VemoParams) -> Self {
        let m = GradientSet::zeros_like(&params);
        let v = GradientSet::zeros_like(&params);
        Self {
            params,
            m,
            v,
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One Adam step. Rejects shape-incongruent or non-finite gradients, naming
/// the offending tensor.
pub fn adam_step(state: &mut TrainState, grads: &GradientSet, cfg: &TrainConfig) -> Result<()> {
    cfg.validate()?;
    let names = state.params.tensor_names();
    {
        let tensors = state.params.tensors();
        if grads.mats.len() != tensors.len() {
            return Err(Error::Config(format!(
                "gradient set has {} tensors, parameters have {}",
                grads.mats.len(),
                tensors.len()
            )));
        }
        for ((g, p), name) in grads.mats.iter().zip(&tensors).zip(&names) {
            if !g.same_shape(p) {
                return Err(Error::Config(format!(
                    "gradient tensor {name} has shape {}x{}, parameter is {}x{}",
                    g.rows(),
                    g.cols(),
                    p.rows(),
                    p.cols()
                )));
            }
            if g.data().iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!(
                    "non-finite gradient in tensor {name}; aborting the update"
                )));
            }
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - cfg.beta1.powi(t);
    let bias2 = 1.0 - cfg.beta2.powi(t);

    for ((param, grad), (m, v)) in state
        .params
        .tensors_mut()
        .into_iter()
        .zip(&grads.mats)
        .zip(state.m.mats.iter_mut().zip(state.v.mats.iter_mut()))
    {
        let p = param.data_mut();
        let g = grad.data();
        let m = m.data_mut();
        let v = v.data_mut();
        for i in 0..p.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            p[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}
