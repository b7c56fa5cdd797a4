//! Audio ingest and MFCC observation sequences.
//!
//! The front end is fixed: 16 kHz mono 16-bit PCM, pre-emphasis 0.97, a
//! 25 ms Hamming window advanced every 10 ms, a 512-point FFT, 26 triangular
//! mel filters over 0..8000 Hz, floored natural-log energies and an
//! orthonormal DCT-II.

mod file;
mod mfcc;
mod wav;

use std::path::PathBuf;

use thiserror::Error;

pub use file::{decode_mfcc, encode_mfcc, read_mfcc, write_mfcc, MFCC_MAGIC, MFCC_VERSION};
pub use mfcc::{
    extract_features, frame_count, hz_to_mel, log_mel_energies, mel_to_hz, MelFilterbank, DEFAULT_DIM, FFT_SIZE,
    HOP_LEN, LOG_FLOOR, NUM_MEL_FILTERS, PRE_EMPHASIS, SAMPLE_RATE, WINDOW_LEN,
};
pub use wav::{decode_wav, read_wav};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("clip too short: {samples} samples, need at least {required}")]
    ClipTooShort { samples: usize, required: usize },
    #[error("unsupported sample rate {0} Hz (only 16000 Hz is accepted)")]
    UnsupportedSampleRate(u32),
    #[error("feature dimension {dim} out of range 1..={max}")]
    DimOutOfRange { dim: usize, max: usize },
    #[error("unsupported WAV encoding (format code {0}); only PCM is accepted")]
    UnsupportedEncoding(u16),
    #[error("unsupported bit depth {0}; only 16-bit samples are accepted")]
    UnsupportedBitDepth(u16),
    #[error("malformed RIFF/WAVE data: {0}")]
    MalformedWav(String),
    #[error("bad magic in mfcc file: expected \"MFCC\", found {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported mfcc file version {0}")]
    VersionMismatch(u32),
    #[error("truncated mfcc payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("trailing bytes after mfcc payload: {0}")]
    TrailingBytes(usize),
    #[error("non-finite value at frame {frame}, coefficient {coeff}")]
    NonFinite { frame: usize, coeff: usize },
    #[error("observation sequence has no frames")]
    Empty,
    #[error("frame {frame} has {found} coefficients, expected {expected}")]
    RaggedFrame { frame: usize, expected: usize, found: usize },
    #[error("feature dimension must be positive")]
    ZeroDim,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = FeatureError> = std::result::Result<T, E>;

/// Mono 16-bit PCM audio.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioClip {
    pub sample_rate: u32,
    pub samples: Vec<i16>,
}

impl AudioClip {
    pub fn new(sample_rate: u32, samples: Vec<i16>) -> Self {
        Self { sample_rate, samples }
    }

    pub fn duration_secs(&self) -> f64 {
        if self.sample_rate == 0 {
            return 0.0;
        }
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// `T` feature vectors of dimension `D`, stored frame-major as `f32`.
///
/// Storage matches the `.mfcc` interchange format exactly, so a sequence
/// survives a write/read cycle bit for bit. Scoring code widens each value
/// to `f64` on the fly.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSequence {
    dim: usize,
    frame_hop_ms: u32,
    data: Vec<f32>,
}

impl ObservationSequence {
    /// Builds a sequence from a flat frame-major buffer.
    pub fn from_flat(dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(FeatureError::ZeroDim);
        }
        if data.is_empty() {
            return Err(FeatureError::Empty);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(FeatureError::RaggedFrame { frame: data.len() / dim, expected: dim, found: data.len() % dim });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite { frame: pos / dim, coeff: pos % dim });
        }
        Ok(Self { dim, frame_hop_ms: mfcc::HOP_MS, data })
    }

    pub fn from_frames<F: AsRef<[f32]>>(dim: usize, frames: &[F]) -> Result<Self> {
        let mut data = Vec::with_capacity(frames.len() * dim);
        for (i, f) in frames.iter().enumerate() {
            let f = f.as_ref();
            if f.len() != dim {
                return Err(FeatureError::RaggedFrame { frame: i, expected: dim, found: f.len() });
            }
            data.extend_from_slice(f);
        }
        Self::from_flat(dim, data)
    }

    /// Convenience for building sequences from `f64` values (rounded to `f32`).
    pub fn from_f64_frames<F: AsRef<[f64]>>(dim: usize, frames: &[F]) -> Result<Self> {
        let narrowed: Vec<Vec<f32>> = frames.iter().map(|f| f.as_ref().iter().map(|&v| v as f32).collect()).collect();
        Self::from_frames(dim, &narrowed)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn frame_hop_ms(&self) -> u32 {
        self.frame_hop_ms
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn frames(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn frame_f64(&self, t: usize) -> Vec<f64> {
        self.frame(t).iter().map(|&v| v as f64).collect()
    }

    pub fn as_flat(&self) -> &[f32] {
        &self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_ragged() {
        assert!(matches!(ObservationSequence::from_flat(2, vec![]), Err(FeatureError::Empty)));
        assert!(matches!(
            ObservationSequence::from_flat(2, vec![1.0, 2.0, 3.0]),
            Err(FeatureError::RaggedFrame { .. })
        ));
        assert!(matches!(ObservationSequence::from_flat(0, vec![1.0]), Err(FeatureError::ZeroDim)));
    }

    #[test]
    fn rejects_non_finite() {
        let err = ObservationSequence::from_flat(2, vec![0.0, 1.0, f32::NAN, 0.0]).unwrap_err();
        assert!(matches!(err, FeatureError::NonFinite { frame: 1, coeff: 0 }));
    }

    #[test]
    fn frame_access() {
        let seq = ObservationSequence::from_frames(2, &[[1.0f32, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.frame(1), &[3.0, 4.0]);
        assert_eq!(seq.frames().count(), 2);
        assert_eq!(seq.frame_hop_ms(), 10);
    }
}
