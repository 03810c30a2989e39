//! Per-source augmentation chain: time stretch, pitch shift, spectral tilt,
//! bandpass filtering and synthetic reverberation.

use rand::Rng as _;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::AugmentError;
use crate::audio::AudioClip;
use crate::rng::Rng;

/// Source augmentation parameters. A degenerate range ((1,1) stretch,
/// (0,0) pitch or tilt) or a zero probability disables that stage, which
/// then leaves the signal bit-identical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SourceAugmentConfig {
    /// Duration multiplier range of the time stretch.
    pub stretch_factor: (f64, f64),
    /// Pitch shift range in semitones.
    pub pitch_semitones: (f64, f64),
    /// Spectral tilt range in dB per octave (reference 1 kHz).
    pub tilt_db_per_oct: (f64, f64),
    pub bandpass_prob: f64,
    pub bandpass_low_hz: (f64, f64),
    pub bandpass_high_hz: (f64, f64),
    pub reverb_prob: f64,
    /// RT60 range of the synthetic reverb in seconds.
    pub reverb_rt60_s: (f64, f64),
}

impl Default for SourceAugmentConfig {
    fn default() -> Self {
        Self {
            stretch_factor: (0.9, 1.1),
            pitch_semitones: (-2.0, 2.0),
            tilt_db_per_oct: (-3.0, 3.0),
            bandpass_prob: 0.3,
            bandpass_low_hz: (100.0, 400.0),
            bandpass_high_hz: (3500.0, 7500.0),
            reverb_prob: 0.3,
            reverb_rt60_s: (0.1, 0.6),
        }
    }
}

impl SourceAugmentConfig {
    /// Everything off: the chain is the identity.
    pub fn disabled() -> Self {
        Self {
            stretch_factor: (1.0, 1.0),
            pitch_semitones: (0.0, 0.0),
            tilt_db_per_oct: (0.0, 0.0),
            bandpass_prob: 0.0,
            bandpass_low_hz: (0.0, 0.0),
            bandpass_high_hz: (0.0, 0.0),
            reverb_prob: 0.0,
            reverb_rt60_s: (0.0, 0.0),
        }
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        for (name, p) in [
            ("bandpass_prob", self.bandpass_prob),
            ("reverb_prob", self.reverb_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(AugmentError::InvalidConfig(format!(
                    "{name} must be in [0,1], got {p}"
                )));
            }
        }
        if self.stretch_factor.0 <= 0.0 {
            return Err(AugmentError::InvalidConfig(
                "stretch factor must be positive".into(),
            ));
        }
        Ok(())
    }

    fn stretch_enabled(&self) -> bool {
        self.stretch_factor != (1.0, 1.0)
    }

    fn pitch_enabled(&self) -> bool {
        self.pitch_semitones != (0.0, 0.0)
    }

    fn tilt_enabled(&self) -> bool {
        self.tilt_db_per_oct != (0.0, 0.0)
    }
}

fn sample_range(rng: &mut Rng, range: (f64, f64)) -> f64 {
    if range.0 >= range.1 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    }
}

/// Linear-interpolation resampler reading the input at `step` samples per
/// output sample.
fn resample(samples: &[f32], step: f64) -> Vec<f32> {
    let out_len = ((samples.len() - 1) as f64 / step).floor() as usize + 1;
    (0..out_len)
        .map(|i| {
            let pos = i as f64 * step;
            let idx = pos as usize;
            let frac = (pos - idx as f64) as f32;
            if idx + 1 < samples.len() {
                samples[idx] * (1.0 - frac) + samples[idx + 1] * frac
            } else {
                samples[idx]
            }
        })
        .collect()
}

/// Crop (shrink) or loop-pad (grow) to the target length.
fn restore_length(mut samples: Vec<f32>, target: usize) -> Vec<f32> {
    if samples.len() > target {
        samples.truncate(target);
        return samples;
    }
    let mut i = 0;
    while samples.len() < target {
        samples.push(samples[i]);
        i += 1;
    }
    samples
}

/// Multiply the full-signal spectrum by a real gain curve.
fn fft_filter(samples: &[f32], gain_at_hz: impl Fn(f64) -> f64, sample_rate: u32) -> Vec<f32> {
    let n = samples.len();
    let mut buf: Vec<Complex<f64>> = samples
        .iter()
        .map(|&s| Complex::new(s as f64, 0.0))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let hz_per_bin = sample_rate as f64 / n as f64;
    for (k, v) in buf.iter_mut().enumerate() {
        let f = if k <= n / 2 {
            k as f64 * hz_per_bin
        } else {
            (n - k) as f64 * hz_per_bin
        };
        let g = gain_at_hz(f);
        *v = Complex::new(v.re * g, v.im * g);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.into_iter().map(|v| (v.re * scale) as f32).collect()
}

/// One RBJ biquad section applied in direct form I.
struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Biquad {
    fn lowpass(cutoff_hz: f64, sample_rate: u32) -> Self {
        let w0 = 2.0 * std::f64::consts::PI * cutoff_hz / sample_rate as f64;
        let q = std::f64::consts::FRAC_1_SQRT_2;
        let alpha = w0.sin() / (2.0 * q);
        let cosc = w0.cos();
        let a0 = 1.0 + alpha;
        Self {
            b0: (1.0 - cosc) / 2.0 / a0,
            b1: (1.0 - cosc) / a0,
            b2: (1.0 - cosc) / 2.0 / a0,
            a1: -2.0 * cosc / a0,
            a2: (1.0 - alpha) / a0,
        }
    }

    fn highpass(cutoff_hz: f64, sample_rate: u32) -> Self {
        let w0 = 2.0 * std::f64::consts::PI * cutoff_hz / sample_rate as f64;
        let q = std::f64::consts::FRAC_1_SQRT_2;
        let alpha = w0.sin() / (2.0 * q);
        let cosc = w0.cos();
        let a0 = 1.0 + alpha;
        Self {
            b0: (1.0 + cosc) / 2.0 / a0,
            b1: -(1.0 + cosc) / a0,
            b2: (1.0 + cosc) / 2.0 / a0,
            a1: -2.0 * cosc / a0,
            a2: (1.0 - alpha) / a0,
        }
    }

    fn process(&self, samples: &[f32]) -> Vec<f32> {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        samples
            .iter()
            .map(|&s| {
                let x0 = s as f64;
                let y0 = self.b0 * x0 + self.b1 * x1 + self.b2 * x2 - self.a1 * y1 - self.a2 * y2;
                x2 = x1;
                x1 = x0;
                y2 = y1;
                y1 = y0;
                y0 as f32
            })
            .collect()
    }
}

/// Convolve with an exponentially decaying noise impulse response of the
/// given RT60 (unit-energy normalized), truncated to the input length.
fn synthetic_reverb(samples: &[f32], rt60_s: f64, sample_rate: u32, rng: &mut Rng) -> Vec<f32> {
    let ir_len = ((1.2 * rt60_s * sample_rate as f64).ceil() as usize).max(8);
    let decay_per_sample = -3.0 * std::f64::consts::LN_10 / (rt60_s * sample_rate as f64);
    let mut ir: Vec<f64> = (0..ir_len)
        .map(|n| rng.random_range(-1.0..1.0) * (decay_per_sample * n as f64).exp())
        .collect();
    let energy: f64 = ir.iter().map(|v| v * v).sum();
    let norm = 1.0 / energy.sqrt();
    for v in &mut ir {
        *v *= norm;
    }

    let n = samples.len();
    let conv_len = (n + ir_len - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(conv_len);
    let ifft = planner.plan_fft_inverse(conv_len);
    let mut sig = vec![Complex::new(0.0, 0.0); conv_len];
    for (slot, &s) in sig.iter_mut().zip(samples) {
        *slot = Complex::new(s as f64, 0.0);
    }
    let mut kernel = vec![Complex::new(0.0, 0.0); conv_len];
    for (slot, &v) in kernel.iter_mut().zip(&ir) {
        *slot = Complex::new(v, 0.0);
    }
    fft.process(&mut sig);
    fft.process(&mut kernel);
    for (s, k) in sig.iter_mut().zip(&kernel) {
        *s *= *k;
    }
    ifft.process(&mut sig);
    let scale = 1.0 / conv_len as f64;
    sig[..n].iter().map(|v| (v.re * scale) as f32).collect()
}

/// Apply the source augmentation chain. Stages run in a fixed order (time
/// stretch, pitch shift, tilt, bandpass, reverb) and the output length is
/// restored to the input length. Disabled stages are skipped entirely, so a
/// fully disabled config returns a bit-identical clip.
pub fn source_augment(clip: &AudioClip, cfg: &SourceAugmentConfig, rng: &mut Rng) -> AudioClip {
    let original_len = clip.samples.len();
    let rate = clip.sample_rate;
    let mut samples = clip.samples.clone();

    if cfg.stretch_enabled() {
        let factor = sample_range(rng, cfg.stretch_factor);
        samples = resample(&samples, 1.0 / factor);
    }
    if cfg.pitch_enabled() {
        let semitones = sample_range(rng, cfg.pitch_semitones);
        let ratio = 2f64.powf(semitones / 12.0);
        samples = resample(&samples, ratio);
    }
    if cfg.tilt_enabled() {
        let tilt = sample_range(rng, cfg.tilt_db_per_oct);
        let nyquist = rate as f64 / 2.0;
        samples = fft_filter(
            &samples,
            |f| {
                let f = f.clamp(50.0, nyquist);
                10f64.powf(tilt * (f / 1000.0).log2() / 20.0)
            },
            rate,
        );
    }
    if cfg.bandpass_prob > 0.0 && rng.random_bool(cfg.bandpass_prob) {
        let low = sample_range(rng, cfg.bandpass_low_hz);
        let high = sample_range(rng, cfg.bandpass_high_hz).max(low * 1.5);
        samples = Biquad::highpass(low, rate).process(&samples);
        samples = Biquad::lowpass(high, rate).process(&samples);
    }
    if cfg.reverb_prob > 0.0 && rng.random_bool(cfg.reverb_prob) {
        let rt60 = sample_range(rng, cfg.reverb_rt60_s).max(0.01);
        samples = synthetic_reverb(&samples, rt60, rate, rng);
    }

    AudioClip::new(restore_length(samples, original_len), rate)
}
