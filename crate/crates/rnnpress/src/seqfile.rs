//! Input sequence files.
//!
//! Layout: `u32` step count, `u32` input dimension, then `steps * dim`
//! values as row-major little-endian f32 (one row per time step). Values
//! are promoted to f64 on load, mirroring the model container.

use std::path::Path;

use rnnpress_core::inference::Sequence;

use crate::write_atomic;

#[derive(Debug, thiserror::Error)]
pub enum SeqError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("sequence file truncated: need {expected} bytes, have {got}")]
    Truncated { expected: u64, got: u64 },
    #[error("{extra} trailing bytes after the sequence data")]
    TrailingBytes { extra: u64 },
    #[error("sequence dimension must be nonzero")]
    ZeroDim,
    #[error("non-finite value at element {index}")]
    NonFinite { index: usize },
}

pub fn to_bytes(seq: &Sequence) -> Vec<u8> {
    let data = seq.as_slice();
    let mut out = Vec::with_capacity(8 + data.len() * 4);
    out.extend_from_slice(&(seq.steps() as u32).to_le_bytes());
    out.extend_from_slice(&(seq.dim() as u32).to_le_bytes());
    for &x in data {
        out.extend_from_slice(&(x as f32).to_le_bytes());
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<Sequence, SeqError> {
    if bytes.len() < 8 {
        return Err(SeqError::Truncated { expected: 8, got: bytes.len() as u64 });
    }
    let steps = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as u64;
    let dim = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as u64;
    if dim == 0 {
        return Err(SeqError::ZeroDim);
    }
    let expected = 8 + steps * dim * 4;
    let have = bytes.len() as u64;
    if have < expected {
        return Err(SeqError::Truncated { expected, got: have });
    }
    if have > expected {
        return Err(SeqError::TrailingBytes { extra: have - expected });
    }
    let mut data = Vec::with_capacity((steps * dim) as usize);
    for (i, chunk) in bytes[8..].chunks_exact(4).enumerate() {
        let x = f32::from_le_bytes(chunk.try_into().unwrap());
        if !x.is_finite() {
            return Err(SeqError::NonFinite { index: i });
        }
        data.push(x as f64);
    }
    Ok(Sequence::from_vec(dim as usize, data).expect("length checked against header"))
}

pub fn save(seq: &Sequence, path: &Path) -> Result<(), SeqError> {
    write_atomic(path, &to_bytes(seq))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Sequence, SeqError> {
    let bytes = std::fs::read(path)?;
    from_bytes(&bytes)
}
