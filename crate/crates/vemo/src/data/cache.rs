//! Dataset cache: a versioned binary container for windowed datasets.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic            8 bytes  "VEMODS01"
//! k                u64
//! n                u64
//! sample_rate_hz   f64
//! scaling          9 x f64  (u_t, u_b, u_s_deg, u_g, a_x_g, a_y_g,
//!                            yaw_rate_deg_s, v_x_kmh, gravity)
//! label_count      u64
//!   per label:     u64 byte length + UTF-8 bytes
//! X                n*k*8 x f64
//! Y                n*4   x f64
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::data::WindowedDataset;
use crate::signal::ScalingTable;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"VEMODS01";

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
        .map_err(|_| Error::Parse(format!("dataset cache truncated while reading {what}")))?;
    Ok(u64::from_le_bytes(buf))
}

fn get_f64(r: &mut impl Read, what: &str) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Parse(format!("dataset cache truncated while reading {what}")))?;
    Ok(f64::from_le_bytes(buf))
}

fn get_f64_vec(r: &mut impl Read, len: usize, what: &str) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; len * 8];
    r.read_exact(&mut bytes)
        .map_err(|_| Error::Parse(format!("dataset cache truncated while reading {what}")))?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Serialize a windowed dataset.
pub fn write_cache(ds: &WindowedDataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    put_u64(&mut w, ds.window_len() as u64)?;
    put_u64(&mut w, ds.len() as u64)?;
    put_f64(&mut w, ds.sample_rate_hz())?;
    let s = ds.scaling();
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
    put_u64(&mut w, ds.labels().len() as u64)?;
    for label in ds.labels() {
        put_u64(&mut w, label.len() as u64)?;
        w.write_all(label.as_bytes())?;
    }
    for v in ds.x_buffer() {
        put_f64(&mut w, *v)?;
    }
    for v in ds.y_buffer() {
        put_f64(&mut w, *v)?;
    }
    w.flush()?;
    Ok(())
}

/// Deserialize a windowed dataset, validating magic, shapes and length.
pub fn read_cache(path: &Path) -> Result<WindowedDataset> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Parse("dataset cache truncated while reading magic".into()))?;
    if &magic != MAGIC {
        return Err(Error::Parse(format!(
            "dataset cache magic/version mismatch: expected {:?}, got {:?}",
            String::from_utf8_lossy(MAGIC),
            String::from_utf8_lossy(&magic)
        )));
    }
    let k = get_u64(&mut r, "window length")? as usize;
    let n = get_u64(&mut r, "window count")? as usize;
    let sample_rate_hz = get_f64(&mut r, "sample rate")?;
    if k == 0 {
        return Err(Error::Parse("dataset cache has zero window length".into()));
    }
    let x_len = n
        .checked_mul(k)
        .and_then(|v| v.checked_mul(8))
        .ok_or_else(|| Error::Parse("dataset cache shape overflow".into()))?;

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

    let label_count = get_u64(&mut r, "label count")? as usize;
    let mut labels = Vec::with_capacity(label_count.min(1024));
    for i in 0..label_count {
        let len = get_u64(&mut r, "label length")? as usize;
        let mut bytes = vec![0u8; len];
        r.read_exact(&mut bytes)
            .map_err(|_| Error::Parse(format!("dataset cache truncated in label {i}")))?;
        labels.push(String::from_utf8(bytes).map_err(|_| {
            Error::Parse(format!("dataset cache label {i} is not valid UTF-8"))
        })?);
    }

    let x = get_f64_vec(&mut r, x_len, "X tensor")?;
    let y = get_f64_vec(&mut r, n * 4, "Y tensor")?;

    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Parse("dataset cache has trailing data".into()));
    }

    WindowedDataset::from_parts(x, y, k, sample_rate_hz, scaling, labels)
}
