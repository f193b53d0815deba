//! Binary cache for ground-state vectors.
//!
//! Layout, all little-endian:
//!
//! | offset | size      | field                                   |
//! |--------|-----------|-----------------------------------------|
//! | 0      | 8         | magic `b"RYDLGS01"`                     |
//! | 8      | 4         | `n_atoms` (u32)                         |
//! | 12     | 4         | flags (u32)                             |
//! | 16     | 8 · 2^N   | amplitudes (f64)                        |
//! | ...    | 24        | energy, gap, residual (f64), if flagged |
//!
//! Flag bits: 0 converged, 1 near-degenerate, 2 metadata trailer present.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{hilbert_dimension, GroundState};
use crate::error::{Error, Result};

pub const STATE_MAGIC: &[u8; 8] = b"RYDLGS01";

const FLAG_CONVERGED: u32 = 1;
const FLAG_NEAR_DEGENERATE: u32 = 1 << 1;
const FLAG_TRAILER: u32 = 1 << 2;

pub fn write_state(path: &Path, state: &GroundState) -> Result<()> {
    let mut flags = FLAG_TRAILER;
    if state.converged {
        flags |= FLAG_CONVERGED;
    }
    if state.near_degenerate {
        flags |= FLAG_NEAR_DEGENERATE;
    }
    let n_atoms = u32::try_from(state.n_atoms).map_err(|_| Error::DimensionOverflow {
        n_atoms: state.n_atoms,
    })?;
    crate::io::write_atomic(path, |f| {
        let mut w = BufWriter::new(f);
        w.write_all(STATE_MAGIC)?;
        w.write_all(&n_atoms.to_le_bytes())?;
        w.write_all(&flags.to_le_bytes())?;
        for a in &state.amplitudes {
            w.write_all(&a.to_le_bytes())?;
        }
        for x in [state.energy, state.gap, state.residual_norm] {
            w.write_all(&x.to_le_bytes())?;
        }
        w.flush()
    })
}

fn read_f64(r: &mut impl Read) -> std::io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_state(path: &Path) -> Result<GroundState> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 16];
    r.read_exact(&mut header)
        .map_err(|_| Error::StateFile("truncated header".into()))?;
    if &header[..8] != STATE_MAGIC {
        return Err(Error::StateFile("bad magic".into()));
    }
    let n_atoms = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let flags = u32::from_le_bytes(header[12..16].try_into().unwrap());
    let dim = hilbert_dimension(n_atoms)?;
    let mut amplitudes = Vec::with_capacity(dim);
    for _ in 0..dim {
        amplitudes.push(read_f64(&mut r).map_err(|_| Error::StateFile("truncated amplitudes".into()))?);
    }
    let (energy, gap, residual_norm) = if flags & FLAG_TRAILER != 0 {
        let mut t = [0.0; 3];
        for x in &mut t {
            *x = read_f64(&mut r).map_err(|_| Error::StateFile("truncated trailer".into()))?;
        }
        (t[0], t[1], t[2])
    } else {
        (0.0, 0.0, 0.0)
    };
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::StateFile(format!("{} trailing bytes", rest.len())));
    }
    Ok(GroundState {
        n_atoms,
        amplitudes,
        energy,
        gap,
        converged: flags & FLAG_CONVERGED != 0,
        residual_norm,
        near_degenerate: flags & FLAG_NEAR_DEGENERATE != 0,
        matvecs: 0,
    })
}
