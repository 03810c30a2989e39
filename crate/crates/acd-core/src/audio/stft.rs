//! Short-time Fourier analysis and magnitude compression.

use rustfft::num_complex::Complex;
use rustfft::{FftNum, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{AudioClip, AudioError};
use crate::scalar::{real, Scalar};

/// Analysis configuration: window length, overlap and magnitude compression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StftConfig {
    /// Analysis window length in milliseconds.
    pub window_ms: f64,
    /// Fraction of the window shared by consecutive frames, in (0, 1).
    pub overlap_fraction: f64,
    /// Exponent applied to spectral magnitudes, in (0, 1].
    pub compression_exponent: f64,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            window_ms: 32.0,
            overlap_fraction: 0.5,
            compression_exponent: 0.3,
        }
    }
}

impl StftConfig {
    /// Window length in samples at the given rate.
    pub fn window_len(&self, sample_rate: u32) -> usize {
        (self.window_ms / 1000.0 * sample_rate as f64).round() as usize
    }

    /// Hop length in samples at the given rate.
    pub fn hop_len(&self, sample_rate: u32) -> usize {
        (self.window_len(sample_rate) as f64 * (1.0 - self.overlap_fraction)).round() as usize
    }

    /// Number of frequency bins of the one-sided spectrum.
    pub fn bins(&self, sample_rate: u32) -> usize {
        self.window_len(sample_rate) / 2 + 1
    }

    pub fn validate(&self, sample_rate: u32) -> Result<(), AudioError> {
        if !(self.window_ms.is_finite() && self.window_ms > 0.0) {
            return Err(AudioError::InvalidConfig(format!(
                "window_ms must be positive, got {}",
                self.window_ms
            )));
        }
        if !(self.overlap_fraction > 0.0 && self.overlap_fraction < 1.0) {
            return Err(AudioError::InvalidConfig(format!(
                "overlap_fraction must be in (0,1), got {}",
                self.overlap_fraction
            )));
        }
        if !(self.compression_exponent > 0.0 && self.compression_exponent <= 1.0) {
            return Err(AudioError::InvalidConfig(format!(
                "compression_exponent must be in (0,1], got {}",
                self.compression_exponent
            )));
        }
        if sample_rate == 0 {
            return Err(AudioError::InvalidConfig("sample rate is zero".into()));
        }
        if self.window_len(sample_rate) < 2 {
            return Err(AudioError::InvalidConfig(format!(
                "window of {} samples is too short",
                self.window_len(sample_rate)
            )));
        }
        if self.hop_len(sample_rate) < 1 {
            return Err(AudioError::InvalidConfig("hop rounds to zero samples".into()));
        }
        Ok(())
    }
}

/// Complex spectrogram, row-major `[frame][bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram<T> {
    pub frames: usize,
    pub bins: usize,
    pub data: Vec<Complex<T>>,
}

impl<T: Copy> Spectrogram<T> {
    #[inline]
    pub fn at(&self, frame: usize, bin: usize) -> Complex<T> {
        self.data[frame * self.bins + bin]
    }
}

/// Number of whole analysis frames for a signal of `n` samples.
///
/// No padding: trailing samples shorter than one window are dropped.
pub fn frame_count(n: usize, window: usize, hop: usize) -> Option<usize> {
    if n < window {
        None
    } else {
        Some((n - window) / hop + 1)
    }
}

fn hann_periodic<T: Scalar>(len: usize) -> Vec<T> {
    let two_pi = std::f64::consts::PI * 2.0;
    (0..len)
        .map(|i| real::<T>(0.5 - 0.5 * (two_pi * i as f64 / len as f64).cos()))
        .collect()
}

/// Short-time Fourier transform with a periodic Hann window.
///
/// Returns the one-sided spectrum (window/2 + 1 bins) per frame. The clip
/// must contain at least one full window; no padding is applied.
pub fn stft<T: Scalar + FftNum>(
    clip: &AudioClip,
    cfg: &StftConfig,
) -> Result<Spectrogram<T>, AudioError> {
    cfg.validate(clip.sample_rate)?;
    let window = cfg.window_len(clip.sample_rate);
    let hop = cfg.hop_len(clip.sample_rate);
    let frames = frame_count(clip.len(), window, hop).ok_or(AudioError::ClipTooShort {
        samples: clip.len(),
        window,
    })?;
    let bins = window / 2 + 1;

    let taper = hann_periodic::<T>(window);
    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft_forward(window);

    let mut data = Vec::with_capacity(frames * bins);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); window];
    for t in 0..frames {
        let start = t * hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            let s = real::<T>(clip.samples[start + i] as f64) * taper[i];
            *slot = Complex::new(s, T::zero());
        }
        fft.process(&mut buf);
        data.extend_from_slice(&buf[..bins]);
    }
    Ok(Spectrogram { frames, bins, data })
}

/// Compress spectral magnitudes with exponent `c`, preserving phase.
///
/// Each value maps to |X|^c · e^(j·arg X); zero magnitude maps to zero.
pub fn compress<T: Scalar>(spec: &Spectrogram<T>, c: T) -> Spectrogram<T> {
    let data = spec
        .data
        .iter()
        .map(|v| {
            let mag = (v.re * v.re + v.im * v.im).sqrt();
            if mag > T::zero() {
                let factor = mag.powf(c - T::one());
                Complex::new(v.re * factor, v.im * factor)
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })
        .collect();
    Spectrogram {
        frames: spec.frames,
        bins: spec.bins,
        data,
    }
}
