//! `.mfcc` interchange files.
//!
//! Little-endian: magic `MFCC`, `u32` version, `u32` dim, `u32` frame count,
//! then `frame_count * dim` `f32` values, frame-major. Nothing else.

use std::path::Path;

use super::{FeatureError, ObservationSequence, Result};

pub const MFCC_MAGIC: [u8; 4] = *b"MFCC";
pub const MFCC_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

pub fn encode_mfcc(seq: &ObservationSequence) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + seq.as_flat().len() * 4);
    out.extend_from_slice(&MFCC_MAGIC);
    out.extend_from_slice(&MFCC_VERSION.to_le_bytes());
    out.extend_from_slice(&(seq.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(seq.len() as u32).to_le_bytes());
    for v in seq.as_flat() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_mfcc(bytes: &[u8]) -> Result<ObservationSequence> {
    if bytes.len() < HEADER_LEN {
        return Err(FeatureError::Truncated { expected: HEADER_LEN, found: bytes.len() });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != MFCC_MAGIC {
        return Err(FeatureError::BadMagic(magic));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = word(4);
    if version != MFCC_VERSION {
        return Err(FeatureError::VersionMismatch(version));
    }
    let dim = word(8) as usize;
    let frames = word(12) as usize;
    if dim == 0 {
        return Err(FeatureError::ZeroDim);
    }
    if frames == 0 {
        return Err(FeatureError::Empty);
    }
    let expected = dim
        .checked_mul(frames)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .unwrap_or(usize::MAX);
    if bytes.len() < expected {
        return Err(FeatureError::Truncated { expected, found: bytes.len() });
    }
    if bytes.len() > expected {
        return Err(FeatureError::TrailingBytes(bytes.len() - expected));
    }
    let data = bytes[HEADER_LEN..].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    ObservationSequence::from_flat(dim, data)
}

/// Writes `seq` atomically: a temporary file in the target directory is
/// renamed over `path` once fully written.
pub fn write_mfcc(seq: &ObservationSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if seq.is_empty() {
        return Err(FeatureError::Empty);
    }
    crate::atomic::write_atomic(path, &encode_mfcc(seq))
        .map_err(|source| FeatureError::Io { path: path.to_path_buf(), source })?;
    Ok(())
}

pub fn read_mfcc(path: impl AsRef<Path>) -> Result<ObservationSequence> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| FeatureError::Io { path: path.to_path_buf(), source })?;
    decode_mfcc(&bytes)
}
