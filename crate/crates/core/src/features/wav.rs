use std::path::Path;

use super::{AudioClip, FeatureError, Result};

const PCM_FORMAT: u16 = 1;

struct Format {
    code: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

/// Reads a RIFF/WAVE file holding 16-bit PCM. Multi-channel audio is
/// down-mixed to mono by averaging.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| FeatureError::Io { path: path.to_path_buf(), source })?;
    decode_wav(&bytes)
}

pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip> {
    let malformed = |msg: &str| FeatureError::MalformedWav(msg.to_string());

    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(malformed("missing RIFF/WAVE header"));
    }
    let riff_len = u32_at(bytes, 4) as usize;
    let end = (riff_len + 8).min(bytes.len());

    let mut format: Option<Format> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= end {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| malformed("chunk extends past end of file"))?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(malformed("fmt chunk shorter than 16 bytes"));
                }
                format = Some(Format {
                    code: u16_at(body, 0),
                    channels: u16_at(body, 2),
                    sample_rate: u32_at(body, 4),
                    bits: u16_at(body, 14),
                });
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word aligned
        pos = body_end + (size & 1);
    }

    let format = format.ok_or_else(|| malformed("no fmt chunk"))?;
    let data = data.ok_or_else(|| malformed("no data chunk"))?;

    if format.code != PCM_FORMAT {
        return Err(FeatureError::UnsupportedEncoding(format.code));
    }
    if format.bits != 16 {
        return Err(FeatureError::UnsupportedBitDepth(format.bits));
    }
    if format.channels == 0 {
        return Err(malformed("zero channels"));
    }
    if format.sample_rate == 0 {
        return Err(malformed("zero sample rate"));
    }
    let channels = format.channels as usize;
    let block = 2 * channels;
    if data.len() % block != 0 {
        return Err(malformed("data chunk is not a whole number of sample frames"));
    }

    let samples = data
        .chunks_exact(block)
        .map(|frame| {
            if channels == 1 {
                return i16::from_le_bytes([frame[0], frame[1]]);
            }
            let sum: i32 = frame.chunks_exact(2).map(|s| i16::from_le_bytes([s[0], s[1]]) as i32).sum();
            (sum as f64 / channels as f64).round() as i16
        })
        .collect();

    Ok(AudioClip { sample_rate: format.sample_rate, samples })
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}
