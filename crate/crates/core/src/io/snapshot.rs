//! Binary state snapshots.
//!
//! Layout, all little-endian:
//!
//! | offset | size | content                      |
//! |--------|------|------------------------------|
//! | 0      | 4    | magic `XDIF`                 |
//! | 4      | 2    | format version (u16)         |
//! | 6      | 2    | dim (u16)                    |
//! | 8      | 4    | n (u32)                      |
//! | 12     | 40   | L, t, chi, xi, epsilon (f64) |
//! | 52     | 12   | zero padding                 |
//! | 64     |      | u, then v, row-major f64     |

use std::fs;
use std::path::Path;

use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

pub const MAGIC: &[u8; 4] = b"XDIF";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 64;

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub state: State,
    pub chi: f64,
    pub xi: f64,
    pub epsilon: f64,
}

pub fn encode(snap: &Snapshot) -> Vec<u8> {
    let grid = snap.state.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * grid.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.dim() as u16).to_le_bytes());
    out.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    for x in [grid.half_width(), snap.state.t, snap.chi, snap.xi, snap.epsilon] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out.resize(HEADER_LEN, 0);
    for f in [&snap.state.u, &snap.state.v] {
        for x in f.values() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Snapshot(format!(
            "size mismatch: {} bytes is shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Snapshot("bad magic, not a snapshot file".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::Snapshot(format!(
            "version mismatch: file has format version {version}, this build reads version {VERSION}"
        )));
    }
    let dim = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let n = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let f = |i: usize| f64::from_le_bytes(bytes[12 + 8 * i..20 + 8 * i].try_into().expect("8 bytes"));
    let (half_width, t, chi, xi, epsilon) = (f(0), f(1), f(2), f(3), f(4));
    let grid = Grid::new(dim, half_width, n).map_err(|e| Error::Snapshot(format!("bad header: {e}")))?;
    let expected = HEADER_LEN + 16 * grid.len();
    if bytes.len() != expected {
        return Err(Error::Snapshot(format!(
            "size mismatch: expected {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let read = |start: usize| -> Vec<f64> {
        bytes[start..start + 8 * grid.len()]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect()
    };
    let u = Field::new(&grid, read(HEADER_LEN))?;
    let v = Field::new(&grid, read(HEADER_LEN + 8 * grid.len()))?;
    Ok(Snapshot {
        state: State::new(u, v, t)?,
        chi,
        xi,
        epsilon,
    })
}

pub fn snapshot_save(snap: &Snapshot, path: &Path) -> Result<()> {
    fs::write(path, encode(snap))?;
    Ok(())
}

pub fn snapshot_load(path: &Path) -> Result<Snapshot> {
    decode(&fs::read(path)?)
}
