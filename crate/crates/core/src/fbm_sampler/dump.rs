//! Little-endian binary dump of a [`PathBatch`].
//!
//! Layout: 8-byte magic, `u32` version, then `H`, `θ`, `T` as `f64`, `n`,
//! `m`, `seed` as `u64`, then `m × n` row-major `f64` increments.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::frac_cov::{HurstModel, UniformGrid};

use super::{PathBatch, Provenance};

const MAGIC: &[u8; 8] = b"FOUPATHS";
const VERSION: u32 = 1;

pub fn write_batch<W: Write>(batch: &PathBatch, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for x in [batch.model.hurst(), batch.model.theta(), batch.model.horizon()] {
        w.write_all(&x.to_le_bytes())?;
    }
    for x in [batch.n() as u64, batch.m as u64, batch.provenance.seed] {
        w.write_all(&x.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(8 * batch.increments.len());
    for x in &batch.increments {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    Ok(b)
}

pub fn read_batch<R: Read>(mut r: R) -> Result<PathBatch> {
    if &take::<8, _>(&mut r)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let hurst = f64::from_le_bytes(take(&mut r)?);
    let theta = f64::from_le_bytes(take(&mut r)?);
    let horizon = f64::from_le_bytes(take(&mut r)?);
    let n = u64::from_le_bytes(take(&mut r)?) as usize;
    let m = u64::from_le_bytes(take(&mut r)?) as usize;
    let seed = u64::from_le_bytes(take(&mut r)?);
    let model = HurstModel::new(hurst, theta, horizon)?;
    let grid = UniformGrid::new(n, horizon)?;
    let len = n
        .checked_mul(m)
        .ok_or_else(|| Error::Format("payload size overflows".into()))?;
    let mut bytes = vec![0u8; len * 8];
    r.read_exact(&mut bytes)
        .map_err(|e| Error::Format(format!("truncated payload: {e}")))?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    let increments = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok(PathBatch {
        model,
        grid,
        m,
        increments,
        provenance: Provenance {
            method: None,
            seed,
            namespace: 0,
            first_replicate: 0,
            clamped_mass: 0.0,
        },
    })
}
