//! Snapshot container: a UTF-8 JSON header followed by the raw coefficient
//! payload.
//!
//! Byte layout:
//!
//! ```text
//! [0..4)    u32 little-endian: byte length H of the JSON header
//! [4..4+H)  UTF-8 JSON header (see `SnapshotHeader`)
//! [4+H..)   payload: for each component in order, row-major coefficients,
//!           each as two little-endian f64 values (re, im) interleaved
//! ```

use std::fs;
use std::path::Path;

use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::GridSpec;
use super::SpectralError;

pub const SNAPSHOT_MAGIC: &str = "shearjet-snapshot-v1";

/// JSON header of a snapshot file.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SnapshotHeader {
    pub magic: String,
    pub d: usize,
    pub n: usize,
    pub components: usize,
    pub dtype: String,
    pub time: f64,
    pub mean_free: bool,
    pub div_free: bool,
    pub symmetric: bool,
    pub traceless: bool,
}

impl SnapshotHeader {
    pub fn new(grid: GridSpec, components: usize, time: f64) -> Self {
        Self {
            magic: SNAPSHOT_MAGIC.to_string(),
            d: grid.dim(),
            n: grid.points_per_axis(),
            components,
            dtype: "f64-le".to_string(),
            time,
            mean_free: false,
            div_free: false,
            symmetric: false,
            traceless: false,
        }
    }
}

/// A decoded snapshot: header plus raw coefficient arrays.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub comps: Vec<ArrayD<Complex64>>,
}

/// Serialize a snapshot to bytes (deterministic for identical inputs).
pub fn snapshot_bytes(header: &SnapshotHeader, comps: &[ArrayD<Complex64>]) -> Vec<u8> {
    let json = serde_json::to_vec(header).expect("header serializes");
    let per_comp = comps.first().map_or(0, |c| c.len());
    let mut out = Vec::with_capacity(4 + json.len() + comps.len() * per_comp * 16);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for c in comps {
        for v in c.iter() {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    out
}

/// Write a snapshot file.
pub fn write_snapshot(
    path: &Path,
    header: &SnapshotHeader,
    comps: &[ArrayD<Complex64>],
) -> Result<(), SpectralError> {
    fs::write(path, snapshot_bytes(header, comps))?;
    Ok(())
}

/// Read and validate a snapshot file.
pub fn read_snapshot(path: &Path) -> Result<Snapshot, SpectralError> {
    let bytes = fs::read(path)?;
    if bytes.len() < 4 {
        return Err(SpectralError::BadContainer("file too short".into()));
    }
    let hlen = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    if bytes.len() < 4 + hlen {
        return Err(SpectralError::BadContainer("truncated header".into()));
    }
    let header: SnapshotHeader = serde_json::from_slice(&bytes[4..4 + hlen])
        .map_err(|e| SpectralError::BadContainer(format!("bad header json: {e}")))?;
    if header.magic != SNAPSHOT_MAGIC {
        return Err(SpectralError::BadContainer(format!(
            "unknown magic {:?}",
            header.magic
        )));
    }
    if header.dtype != "f64-le" {
        return Err(SpectralError::BadContainer(format!(
            "unsupported dtype {:?}",
            header.dtype
        )));
    }
    let per_comp = header.n.pow(header.d as u32);
    let expected = 4 + hlen + header.components * per_comp * 16;
    if bytes.len() != expected {
        return Err(SpectralError::BadContainer(format!(
            "payload length {} ≠ expected {}",
            bytes.len(),
            expected
        )));
    }
    let shape = vec![header.n; header.d];
    let mut comps = Vec::with_capacity(header.components);
    let mut off = 4 + hlen;
    for _ in 0..header.components {
        let mut data = Vec::with_capacity(per_comp);
        for _ in 0..per_comp {
            let re = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            let im = f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap());
            data.push(Complex64::new(re, im));
            off += 16;
        }
        comps.push(
            ArrayD::from_shape_vec(IxDyn(&shape), data)
                .map_err(|e| SpectralError::BadContainer(format!("bad shape: {e}")))?,
        );
    }
    Ok(Snapshot { header, comps })
}
