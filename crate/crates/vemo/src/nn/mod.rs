//! The network: GRU and dense layers with exact forward and backward passes,
//! the shared-encoder / four-branch-decoder topology, and checkpoint
//! serialization.
//!
//! Everything runs in double precision. Parameters are immutable during
//! forward/backward, so gradient computation for different windows is freely
//! parallel; reductions happen in a fixed order elsewhere so results do not
//! depend on the thread count.

mod activation;
mod checkpoint;
mod dense;
mod gru;
mod linalg;
mod model;

pub use activation::{elu, elu_deriv, CandidateActivation, GateActivation};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use dense::{DenseActivation, DenseLayer};
pub use gru::{gru_backward, gru_forward, GruLayerParams, GruTrace};
pub use linalg::Mat;
pub use model::{
    vemo_backward, vemo_forward, ArchConfig, BranchParams, GradientSet, VemoParams, STATE_NAMES,
};
