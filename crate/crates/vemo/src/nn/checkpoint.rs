//! Checkpoint container for trained networks.
//!
//! Layout (integers/floats little-endian):
//!
//! ```text
//! magic               8 bytes "VEMOCK01"
//! window_len          u64
//! training_cutoff_hz  f64
//! scaling             9 x f64 (same order as the dataset cache)
//! encoder layer count u64
//!   per layer: input u64, hidden u64, gate u8 (0 logistic, 1 elu),
//!              candidate u8 (0 tanh, 1 elu)
//! branch count        u64 (must be 4)
//!   per branch: layer count u64
//!     per layer: input u64, output u64, activation u8 (0 linear, 1 elu)
//! tensors             raw f64, canonical order, shapes implied by header
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::nn::activation::{CandidateActivation, GateActivation};
use crate::nn::dense::{DenseActivation, DenseLayer};
use crate::nn::gru::GruLayerParams;
use crate::nn::linalg::Mat;
use crate::nn::model::{BranchParams, VemoParams};
use crate::signal::ScalingTable;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"VEMOCK01";

/// A trained network together with the preprocessing contract it was trained
/// under. Evaluation refuses datasets whose window length or scaling differ.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: VemoParams,
    pub window_len: usize,
    pub scaling: ScalingTable,
    pub training_cutoff_hz: f64,
}

fn put_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u64(r: &mut impl Read, what: &str) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Parse(format!("checkpoint truncated while reading {what}")))?;
    Ok(u64::from_le_bytes(buf))
}

fn get_f64(r: &mut impl Read, what: &str) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Parse(format!("checkpoint truncated while reading {what}")))?;
    Ok(f64::from_le_bytes(buf))
}

fn get_u8(r: &mut impl Read, what: &str) -> Result<u8> {
    let mut buf = [0u8; 1];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Parse(format!("checkpoint truncated while reading {what}")))?;
    Ok(buf[0])
}

/// Serialize to any writer.
pub fn write_checkpoint(ck: &Checkpoint, mut w: impl Write) -> Result<()> {
    ck.params.validate()?;
    w.write_all(MAGIC)?;
    put_u64(&mut w, ck.window_len as u64)?;
    put_f64(&mut w, ck.training_cutoff_hz)?;
    let s = &ck.scaling;
    for v in [
        s.u_t,
        s.u_b,
        s.u_s_deg,
        s.u_g,
        s.a_x_g,
        s.a_y_g,
        s.yaw_rate_deg_s,
        s.v_x_kmh,
        s.gravity,
    ] {
        put_f64(&mut w, v)?;
    }

    put_u64(&mut w, ck.params.encoder.len() as u64)?;
    for layer in &ck.params.encoder {
        put_u64(&mut w, layer.input_dim() as u64)?;
        put_u64(&mut w, layer.hidden_dim() as u64)?;
        w.write_all(&[match layer.gate_activation {
            GateActivation::Logistic => 0,
            GateActivation::Elu => 1,
        }])?;
        w.write_all(&[match layer.candidate_activation {
            CandidateActivation::Tanh => 0,
            CandidateActivation::Elu => 1,
        }])?;
    }
    put_u64(&mut w, ck.params.branches.len() as u64)?;
    for branch in &ck.params.branches {
        put_u64(&mut w, branch.layers.len() as u64)?;
        for layer in &branch.layers {
            put_u64(&mut w, layer.input_dim() as u64)?;
            put_u64(&mut w, layer.output_dim() as u64)?;
            w.write_all(&[match layer.activation {
                DenseActivation::Linear => 0,
                DenseActivation::Elu => 1,
            }])?;
        }
    }
    for mat in ck.params.tensors() {
        for v in mat.data() {
            put_f64(&mut w, *v)?;
        }
    }
    Ok(())
}

/// Persist a checkpoint.
pub fn save_checkpoint(ck: &Checkpoint, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(ck, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Deserialize from any reader, validating magic, structure and length.
pub fn read_checkpoint(mut r: impl Read) -> Result<Checkpoint> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Parse("checkpoint truncated while reading magic".into()))?;
    if &magic != MAGIC {
        return Err(Error::Parse(format!(
            "checkpoint magic/version mismatch: expected {:?}, got {:?}",
            String::from_utf8_lossy(MAGIC),
            String::from_utf8_lossy(&magic)
        )));
    }
    let window_len = get_u64(&mut r, "window length")? as usize;
    let training_cutoff_hz = get_f64(&mut r, "training cutoff")?;
    let scaling = ScalingTable {
        u_t: get_f64(&mut r, "scaling.u_t")?,
        u_b: get_f64(&mut r, "scaling.u_b")?,
        u_s_deg: get_f64(&mut r, "scaling.u_s_deg")?,
        u_g: get_f64(&mut r, "scaling.u_g")?,
        a_x_g: get_f64(&mut r, "scaling.a_x_g")?,
        a_y_g: get_f64(&mut r, "scaling.a_y_g")?,
        yaw_rate_deg_s: get_f64(&mut r, "scaling.yaw_rate_deg_s")?,
        v_x_kmh: get_f64(&mut r, "scaling.v_x_kmh")?,
        gravity: get_f64(&mut r, "scaling.gravity")?,
    };

    let n_encoder = get_u64(&mut r, "encoder layer count")? as usize;
    if n_encoder == 0 || n_encoder > 64 {
        return Err(Error::Parse(format!(
            "checkpoint encoder layer count {n_encoder} is not plausible"
        )));
    }
    let mut encoder_shapes = Vec::with_capacity(n_encoder);
    for i in 0..n_encoder {
        let d = get_u64(&mut r, "encoder input dim")? as usize;
        let f = get_u64(&mut r, "encoder hidden dim")? as usize;
        let gate = match get_u8(&mut r, "gate activation")? {
            0 => GateActivation::Logistic,
            1 => GateActivation::Elu,
            other => {
                return Err(Error::Parse(format!(
                    "encoder layer {i}: unknown gate activation tag {other}"
                )))
            }
        };
        let candidate = match get_u8(&mut r, "candidate activation")? {
            0 => CandidateActivation::Tanh,
            1 => CandidateActivation::Elu,
            other => {
                return Err(Error::Parse(format!(
                    "encoder layer {i}: unknown candidate activation tag {other}"
                )))
            }
        };
        encoder_shapes.push((d, f, gate, candidate));
    }

    let n_branches = get_u64(&mut r, "branch count")? as usize;
    if n_branches != 4 {
        return Err(Error::Parse(format!(
            "checkpoint must hold exactly four decoder branches, found {n_branches}"
        )));
    }
    let mut branch_shapes = Vec::with_capacity(4);
    for b in 0..4 {
        let n_layers = get_u64(&mut r, "branch layer count")? as usize;
        if n_layers == 0 || n_layers > 64 {
            return Err(Error::Parse(format!(
                "branch {b} layer count {n_layers} is not plausible"
            )));
        }
        let mut layers = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let din = get_u64(&mut r, "dense input dim")? as usize;
            let dout = get_u64(&mut r, "dense output dim")? as usize;
            let act = match get_u8(&mut r, "dense activation")? {
                0 => DenseActivation::Linear,
                1 => DenseActivation::Elu,
                other => {
                    return Err(Error::Parse(format!(
                        "branch {b} layer {l}: unknown activation tag {other}"
                    )))
                }
            };
            layers.push((din, dout, act));
        }
        branch_shapes.push(layers);
    }

    let mut read_mat = |rows: usize, cols: usize, what: &str| -> Result<Mat> {
        let mut bytes = vec![0u8; rows * cols * 8];
        r.read_exact(&mut bytes)
            .map_err(|_| Error::Parse(format!("checkpoint truncated while reading {what}")))?;
        Ok(Mat::from_vec(
            rows,
            cols,
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ))
    };

    let mut encoder = Vec::with_capacity(n_encoder);
    for (d, f, gate, candidate) in encoder_shapes {
        encoder.push(GruLayerParams {
            w_z: read_mat(f, d, "w_z")?,
            w_r: read_mat(f, d, "w_r")?,
            w_h: read_mat(f, d, "w_h")?,
            u_z: read_mat(f, f, "u_z")?,
            u_r: read_mat(f, f, "u_r")?,
            u_h: read_mat(f, f, "u_h")?,
            gate_activation: gate,
            candidate_activation: candidate,
        });
    }
    let mut branches = Vec::with_capacity(4);
    for layers in branch_shapes {
        let mut built = Vec::with_capacity(layers.len());
        for (din, dout, act) in layers {
            built.push(DenseLayer {
                w: read_mat(dout, din, "dense weight")?,
                activation: act,
            });
        }
        branches.push(BranchParams { layers: built });
    }

    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Parse("checkpoint has trailing data".into()));
    }

    let params = VemoParams {
        encoder,
        branches: branches
            .try_into()
            .map_err(|_| Error::Parse("checkpoint branch conversion failed".into()))?,
    };
    params.validate().map_err(|e| {
        Error::Parse(format!("checkpoint structure is inconsistent: {e}"))
    })?;
    Ok(Checkpoint {
        params,
        window_len,
        scaling,
        training_cutoff_hz,
    })
}

/// Load a checkpoint from disk.
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    read_checkpoint(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::model::ArchConfig;

    fn sample_checkpoint() -> Checkpoint {
        Checkpoint {
            params: VemoParams::init(
                &ArchConfig {
                    encoder_widths: vec![4],
                    branch_hidden: vec![3],
                },
                42,
            )
            .unwrap(),
            window_len: 10,
            scaling: ScalingTable::default(),
            training_cutoff_hz: 5.0,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let ck = sample_checkpoint();
        let mut buf = Vec::new();
        write_checkpoint(&ck, &mut buf).unwrap();
        let back = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(ck, back);
    }

    #[test]
    fn corrupted_magic_rejected() {
        let ck = sample_checkpoint();
        let mut buf = Vec::new();
        write_checkpoint(&ck, &mut buf).unwrap();
        buf[0] = b'X';
        let err = read_checkpoint(buf.as_slice()).unwrap_err();
        assert!(err.to_string().contains("magic"), "{err}");
    }

    #[test]
    fn truncated_file_rejected() {
        let ck = sample_checkpoint();
        let mut buf = Vec::new();
        write_checkpoint(&ck, &mut buf).unwrap();
        buf.truncate(buf.len() - 5);
        let err = read_checkpoint(buf.as_slice()).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
    }

    #[test]
    fn wrong_branch_count_is_a_structural_error() {
        let ck = sample_checkpoint();
        let mut buf = Vec::new();
        write_checkpoint(&ck, &mut buf).unwrap();
        // Branch-count field offset for the single-encoder-layer layout:
        // magic 8 + k 8 + cutoff 8 + scaling 72 + count 8 + layer (8+8+1+1).
        let offset = 8 + 8 + 8 + 72 + 8 + 18;
        assert_eq!(u64::from_le_bytes(buf[offset..offset + 8].try_into().unwrap()), 4);
        buf[offset..offset + 8].copy_from_slice(&3u64.to_le_bytes());
        let err = read_checkpoint(buf.as_slice()).unwrap_err();
        assert!(err.to_string().contains("four"), "{err}");
    }
}
