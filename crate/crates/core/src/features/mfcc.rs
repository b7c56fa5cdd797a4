use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{AudioClip, FeatureError, ObservationSequence, Result};

pub const SAMPLE_RATE: u32 = 16_000;
pub const WINDOW_LEN: usize = 400;
pub const HOP_LEN: usize = 160;
pub(crate) const HOP_MS: u32 = 10;
pub const FFT_SIZE: usize = 512;
pub const NUM_MEL_FILTERS: usize = 26;
pub const PRE_EMPHASIS: f64 = 0.97;
pub const LOG_FLOOR: f64 = 1e-10;
pub const DEFAULT_DIM: usize = 13;

const MEL_LOW_HZ: f64 = 0.0;
const MEL_HIGH_HZ: f64 = 8000.0;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Number of full analysis windows in `samples` samples.
pub fn frame_count(samples: usize) -> usize {
    if samples < WINDOW_LEN {
        0
    } else {
        (samples - WINDOW_LEN) / HOP_LEN + 1
    }
}

/// Triangular filters on the mel scale, sampled at the FFT bin frequencies.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// Filter edge frequencies in Hz: `n_filters + 2` points, equally spaced in mel.
    edges_hz: Vec<f64>,
    /// `n_filters` rows of `FFT_SIZE / 2 + 1` weights.
    weights: Vec<Vec<f64>>,
}

impl MelFilterbank {
    pub fn new(n_filters: usize, fft_size: usize, sample_rate: u32) -> Self {
        let lo = hz_to_mel(MEL_LOW_HZ);
        let hi = hz_to_mel(MEL_HIGH_HZ);
        let edges_hz: Vec<f64> =
            (0..n_filters + 2).map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_filters + 1) as f64)).collect();
        let n_bins = fft_size / 2 + 1;
        let bin_hz = sample_rate as f64 / fft_size as f64;
        let weights = (0..n_filters)
            .map(|m| {
                let (left, centre, right) = (edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]);
                (0..n_bins)
                    .map(|k| {
                        let f = k as f64 * bin_hz;
                        let rising = (f - left) / (centre - left);
                        let falling = (right - f) / (right - centre);
                        rising.min(falling).max(0.0)
                    })
                    .collect()
            })
            .collect();
        Self { edges_hz, weights }
    }

    pub fn standard() -> Self {
        Self::new(NUM_MEL_FILTERS, FFT_SIZE, SAMPLE_RATE)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn centre_hz(&self, filter: usize) -> f64 {
        self.edges_hz[filter + 1]
    }

    pub fn edges_hz(&self) -> &[f64] {
        &self.edges_hz
    }

    pub fn weights(&self, filter: usize) -> &[f64] {
        &self.weights[filter]
    }

    fn apply(&self, power: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.iter().map(|w| {
            let e: f64 = w.iter().zip(power).map(|(a, b)| a * b).sum();
            e.max(LOG_FLOOR).ln()
        }));
    }
}

struct FrontEnd {
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    filterbank: MelFilterbank,
}

impl FrontEnd {
    fn new() -> Self {
        let window =
            (0..WINDOW_LEN).map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (WINDOW_LEN - 1) as f64).cos()).collect();
        let fft = FftPlanner::new().plan_fft_forward(FFT_SIZE);
        Self { window, fft, filterbank: MelFilterbank::standard() }
    }

    /// Log mel energies per frame, after pre-emphasis and windowing.
    fn log_energies(&self, clip: &AudioClip) -> Vec<Vec<f64>> {
        let x: Vec<f64> = clip.samples.iter().map(|&s| s as f64 / 32768.0).collect();
        let mut emphasized = Vec::with_capacity(x.len());
        if let Some(&first) = x.first() {
            emphasized.push(first);
        }
        emphasized.extend(x.windows(2).map(|w| w[1] - PRE_EMPHASIS * w[0]));

        let n_frames = frame_count(x.len());
        let mut buf = vec![Complex::new(0.0, 0.0); FFT_SIZE];
        let mut power = vec![0.0; FFT_SIZE / 2 + 1];
        let mut out = Vec::with_capacity(n_frames);
        for t in 0..n_frames {
            let start = t * HOP_LEN;
            for (i, slot) in buf.iter_mut().enumerate() {
                *slot = if i < WINDOW_LEN {
                    Complex::new(emphasized[start + i] * self.window[i], 0.0)
                } else {
                    Complex::new(0.0, 0.0)
                };
            }
            self.fft.process(&mut buf);
            for (p, c) in power.iter_mut().zip(&buf) {
                *p = c.norm_sqr() / FFT_SIZE as f64;
            }
            let mut energies = Vec::with_capacity(self.filterbank.len());
            self.filterbank.apply(&power, &mut energies);
            out.push(energies);
        }
        out
    }
}

fn check_clip(clip: &AudioClip) -> Result<()> {
    if clip.sample_rate != SAMPLE_RATE {
        return Err(FeatureError::UnsupportedSampleRate(clip.sample_rate));
    }
    if clip.samples.len() < WINDOW_LEN {
        return Err(FeatureError::ClipTooShort { samples: clip.samples.len(), required: WINDOW_LEN });
    }
    Ok(())
}

/// Floored natural-log filterbank energies, one row of 26 values per frame.
pub fn log_mel_energies(clip: &AudioClip) -> Result<Vec<Vec<f64>>> {
    check_clip(clip)?;
    Ok(FrontEnd::new().log_energies(clip))
}

/// Computes `dim` MFCCs per 10 ms frame.
pub fn extract_features(clip: &AudioClip, dim: usize) -> Result<ObservationSequence> {
    if dim == 0 || dim > NUM_MEL_FILTERS {
        return Err(FeatureError::DimOutOfRange { dim, max: NUM_MEL_FILTERS });
    }
    check_clip(clip)?;

    let energies = FrontEnd::new().log_energies(clip);
    let m = NUM_MEL_FILTERS as f64;
    let basis: Vec<Vec<f64>> = (0..dim)
        .map(|k| {
            let scale = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
            (0..NUM_MEL_FILTERS).map(|n| scale * (PI * k as f64 * (n as f64 + 0.5) / m).cos()).collect()
        })
        .collect();

    let mut data = Vec::with_capacity(energies.len() * dim);
    for frame in &energies {
        for row in &basis {
            let c: f64 = row.iter().zip(frame).map(|(b, e)| b * e).sum();
            data.push(c as f32);
        }
    }
    ObservationSequence::from_flat(dim, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, n: usize) -> AudioClip {
        let samples =
            (0..n).map(|i| (10_000.0 * (2.0 * PI * freq * i as f64 / 16_000.0).sin()).round() as i16).collect();
        AudioClip::new(16_000, samples)
    }

    #[test]
    fn frame_count_formula() {
        assert_eq!(frame_count(8000), 48);
        assert_eq!(frame_count(400), 1);
        assert_eq!(frame_count(399), 0);
        assert_eq!(frame_count(559), 1);
        assert_eq!(frame_count(560), 2);
    }

    #[test]
    fn half_second_gives_48_frames() {
        let seq = extract_features(&sine(440.0, 8000), 13).unwrap();
        assert_eq!(seq.len(), 48);
        assert_eq!(seq.dim(), 13);
    }

    #[test]
    fn repeated_extraction_is_bit_identical() {
        let clip = sine(523.0, 12_345);
        let a = extract_features(&clip, 13).unwrap();
        let b = extract_features(&clip, 13).unwrap();
        let bits = |s: &ObservationSequence| s.as_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn silence_stays_finite() {
        let seq = extract_features(&AudioClip::new(16_000, vec![0; 1600]), 13).unwrap();
        assert!(seq.as_flat().iter().all(|v| v.is_finite()));
        // c0 of an all-floor frame: sqrt(26) * ln(1e-10)
        let expected = (26f64).sqrt() * LOG_FLOOR.ln();
        assert!((seq.frame(0)[0] as f64 - expected).abs() < 1e-3);
        assert!(seq.frame(0)[1..].iter().all(|v| v.abs() < 1e-3));
    }

    #[test]
    fn argument_errors() {
        let clip = sine(440.0, 8000);
        assert!(matches!(extract_features(&clip, 0), Err(FeatureError::DimOutOfRange { .. })));
        assert!(matches!(extract_features(&clip, 27), Err(FeatureError::DimOutOfRange { .. })));
        assert!(extract_features(&clip, 26).is_ok());
        let short = AudioClip::new(16_000, vec![0; 399]);
        assert!(matches!(extract_features(&short, 13), Err(FeatureError::ClipTooShort { .. })));
        let wrong_rate = AudioClip::new(8_000, vec![0; 8000]);
        assert!(matches!(extract_features(&wrong_rate, 13), Err(FeatureError::UnsupportedSampleRate(8000))));
    }

    #[test]
    fn filterbank_shape() {
        let fb = MelFilterbank::standard();
        assert_eq!(fb.len(), 26);
        assert_eq!(fb.edges_hz().len(), 28);
        assert!(fb.edges_hz()[0].abs() < 1e-9);
        assert!((fb.edges_hz()[27] - 8000.0).abs() < 1e-6);
        for m in 0..fb.len() {
            let peak = fb.weights(m).iter().cloned().fold(0.0, f64::max);
            assert!(peak > 0.0 && peak <= 1.0, "filter {m} peak {peak}");
        }
    }

    #[test]
    fn mel_scale_inverts() {
        for hz in [0.0, 100.0, 1000.0, 7999.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
        assert!((hz_to_mel(700.0) - 2595.0 * 2f64.log10()).abs() < 1e-12);
    }
}
