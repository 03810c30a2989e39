//! Synthetic polyphonic audio with ground-truth labels and controlled label
//! noise.
//!
//! Eight sound families with distinct spectral/temporal signatures stand in
//! for real-world sound categories. Clips mix 1..polyphony_max families; the
//! label vector records exactly the mixed classes. Everything is a pure
//! function of (parameters, seed).

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{write_wav_pcm16, AudioClip, AudioError};
use crate::labels::{LabelState, TriStateLabelVector};
use crate::manifest::ManifestRow;
use crate::rng::{derive_seed, seeded_rng, Rng};

/// Signal generator kind with its parameter ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum FamilyKind {
    /// Harmonic stack with randomized fundamental and slow amplitude wobble.
    ToneComplex {
        fundamental_hz: (f64, f64),
        partials: usize,
    },
    /// Linear frequency sweep over the whole clip.
    Chirp {
        start_hz: (f64, f64),
        end_hz: (f64, f64),
    },
    /// Brickwall-filtered white noise.
    NoiseBand {
        low_hz: (f64, f64),
        high_hz: (f64, f64),
    },
    /// Band noise multiplied by a periodic pulse envelope.
    PulsedNoise {
        low_hz: (f64, f64),
        high_hz: (f64, f64),
        pulse_rate_hz: (f64, f64),
    },
    /// Short broadband clicks at a (jittered) regular rate.
    ClickTrain { rate_hz: (f64, f64) },
}

/// One synthetic sound class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundFamily {
    pub class_id: usize,
    pub name: String,
    #[serde(flatten)]
    pub kind: FamilyKind,
    /// Standalone clip duration range in seconds.
    pub duration_s: (f64, f64),
}

/// The default family set, up to 8 classes.
///
/// The first three (low tones, mid tones, rising chirp) are strongly
/// separable and double as the toy set for convergence tests; later families
/// deliberately share spectral regions so the classification problem is not
/// trivial.
pub fn default_families(count: usize) -> Result<Vec<SoundFamily>, SynthError> {
    let catalog: Vec<(&str, FamilyKind)> = vec![
        (
            "tone-low",
            FamilyKind::ToneComplex {
                fundamental_hz: (90.0, 180.0),
                partials: 8,
            },
        ),
        (
            "tone-mid",
            FamilyKind::ToneComplex {
                fundamental_hz: (300.0, 700.0),
                partials: 5,
            },
        ),
        (
            "chirp-up",
            FamilyKind::Chirp {
                start_hz: (300.0, 800.0),
                end_hz: (2500.0, 4500.0),
            },
        ),
        (
            "chirp-down",
            FamilyKind::Chirp {
                start_hz: (4500.0, 7000.0),
                end_hz: (1000.0, 2000.0),
            },
        ),
        (
            "band-mid",
            FamilyKind::NoiseBand {
                low_hz: (1400.0, 1800.0),
                high_hz: (2600.0, 3200.0),
            },
        ),
        (
            "band-high",
            FamilyKind::NoiseBand {
                low_hz: (3000.0, 3800.0),
                high_hz: (4800.0, 6500.0),
            },
        ),
        (
            "pulsed",
            FamilyKind::PulsedNoise {
                low_hz: (700.0, 1000.0),
                high_hz: (2300.0, 2800.0),
                pulse_rate_hz: (2.0, 8.0),
            },
        ),
        (
            "clicks",
            FamilyKind::ClickTrain { rate_hz: (3.0, 10.0) },
        ),
    ];
    if count == 0 || count > catalog.len() {
        return Err(SynthError::InvalidParams(format!(
            "class count must be in 1..={}, got {count}",
            catalog.len()
        )));
    }
    Ok(catalog
        .into_iter()
        .take(count)
        .enumerate()
        .map(|(class_id, (name, kind))| SoundFamily {
            class_id,
            name: name.to_string(),
            kind,
            duration_s: (5.0, 12.0),
        })
        .collect())
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid dataset parameters: {0}")]
    InvalidParams(String),
    #[error("cannot write {path}: {detail}")]
    Io { path: String, detail: String },
    #[error("label noise requires binary labels; manifest contains masked entries")]
    MaskedInput,
    #[error(transparent)]
    Audio(#[from] AudioError),
}

fn sample_range(rng: &mut Rng, range: (f64, f64)) -> f64 {
    if range.0 >= range.1 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    }
}

fn apply_fades(samples: &mut [f32], sample_rate: u32) {
    let fade = ((sample_rate as f64 * 0.01) as usize).min(samples.len() / 2);
    for i in 0..fade {
        let g = 0.5 - 0.5 * (PI * i as f64 / fade as f64).cos();
        samples[i] *= g as f32;
        let j = samples.len() - 1 - i;
        samples[j] *= g as f32;
    }
}

fn normalize_peak(samples: &mut [f32], target: f32) {
    let peak = samples.iter().fold(0f32, |m, &s| m.max(s.abs()));
    if peak > 0.0 {
        let g = target / peak;
        for s in samples.iter_mut() {
            *s *= g;
        }
    }
}

/// Brickwall bandpass of white noise via an FFT padded to a power of two.
fn band_noise(rng: &mut Rng, len: usize, sample_rate: u32, low_hz: f64, high_hz: f64) -> Vec<f32> {
    let nfft = len.next_power_of_two();
    let mut buf: Vec<Complex<f64>> = (0..nfft)
        .map(|_| Complex::new(rng.random_range(-1.0..1.0), 0.0))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(nfft).process(&mut buf);
    let hz_per_bin = sample_rate as f64 / nfft as f64;
    for (k, v) in buf.iter_mut().enumerate() {
        // Mirror-aware bin frequency.
        let f = if k <= nfft / 2 {
            k as f64 * hz_per_bin
        } else {
            (nfft - k) as f64 * hz_per_bin
        };
        if !(low_hz..=high_hz).contains(&f) {
            *v = Complex::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(nfft).process(&mut buf);
    let scale = 1.0 / nfft as f64;
    buf.into_iter()
        .take(len)
        .map(|v| (v.re * scale) as f32)
        .collect()
}

/// Synthesize one clip of a family. Deterministic in (family, duration,
/// seed); peak amplitude is normalized to 0.7.
pub fn synth_clip(
    family: &SoundFamily,
    duration_s: f64,
    sample_rate: u32,
    seed: u64,
) -> AudioClip {
    assert!(duration_s >= 0.1, "clip duration below 0.1 s");
    let mut rng = seeded_rng(seed);
    let len = (duration_s * sample_rate as f64).round() as usize;
    let dt = 1.0 / sample_rate as f64;

    let mut samples: Vec<f32> = match &family.kind {
        FamilyKind::ToneComplex {
            fundamental_hz,
            partials,
        } => {
            let f0 = sample_range(&mut rng, *fundamental_hz);
            let phases: Vec<f64> = (0..*partials).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
            let am_rate = rng.random_range(0.2..1.5);
            let am_phase = rng.random_range(0.0..2.0 * PI);
            (0..len)
                .map(|i| {
                    let t = i as f64 * dt;
                    let mut v = 0.0;
                    for (h, phi) in phases.iter().enumerate() {
                        let f = f0 * (h + 1) as f64;
                        if f < sample_rate as f64 / 2.0 {
                            v += (2.0 * PI * f * t + phi).sin() / (h + 1) as f64;
                        }
                    }
                    let am = 1.0 + 0.3 * (2.0 * PI * am_rate * t + am_phase).sin();
                    (v * am) as f32
                })
                .collect()
        }
        FamilyKind::Chirp { start_hz, end_hz } => {
            let f_start = sample_range(&mut rng, *start_hz);
            let f_end = sample_range(&mut rng, *end_hz);
            let phi0 = rng.random_range(0.0..2.0 * PI);
            let sweep = (f_end - f_start) / duration_s;
            (0..len)
                .map(|i| {
                    let t = i as f64 * dt;
                    let phase = 2.0 * PI * (f_start * t + 0.5 * sweep * t * t) + phi0;
                    phase.sin() as f32
                })
                .collect()
        }
        FamilyKind::NoiseBand { low_hz, high_hz } => {
            let low = sample_range(&mut rng, *low_hz);
            let high = sample_range(&mut rng, *high_hz);
            band_noise(&mut rng, len, sample_rate, low, high)
        }
        FamilyKind::PulsedNoise {
            low_hz,
            high_hz,
            pulse_rate_hz,
        } => {
            let low = sample_range(&mut rng, *low_hz);
            let high = sample_range(&mut rng, *high_hz);
            let rate = sample_range(&mut rng, *pulse_rate_hz);
            let noise = band_noise(&mut rng, len, sample_rate, low, high);
            noise
                .into_iter()
                .enumerate()
                .map(|(i, s)| {
                    let t = i as f64 * dt;
                    let env = (PI * rate * t).sin().powi(2);
                    s * env as f32
                })
                .collect()
        }
        FamilyKind::ClickTrain { rate_hz } => {
            let rate = sample_range(&mut rng, *rate_hz);
            let mut out = vec![0f32; len];
            let interval = 1.0 / rate;
            let click_len = (0.002 * sample_rate as f64) as usize;
            let mut k = 0usize;
            loop {
                let jitter = rng.random_range(-0.05..0.05) * interval;
                let t = k as f64 * interval + jitter;
                if t < 0.0 {
                    k += 1;
                    continue;
                }
                let start = (t * sample_rate as f64) as usize;
                if start >= len || k as f64 * interval >= duration_s {
                    break;
                }
                for j in 0..click_len.min(len - start) {
                    let decay = (-(j as f64) / (0.0005 * sample_rate as f64)).exp();
                    out[start + j] += (rng.random_range(-1.0..1.0) * decay) as f32;
                }
                k += 1;
            }
            out
        }
    };

    if !matches!(family.kind, FamilyKind::ClickTrain { .. }) {
        apply_fades(&mut samples, sample_rate);
    }
    normalize_peak(&mut samples, 0.7);
    AudioClip::new(samples, sample_rate)
}

/// Choose how many and which classes one clip mixes.
///
/// Draws k ~ uniform{1..polyphony_max}, then k distinct classes uniformly
/// without replacement. The per-class presence rate is therefore
/// E[k]/C = (polyphony_max + 1) / (2 C).
pub fn sample_polyphony(classes: usize, polyphony_max: usize, rng: &mut Rng) -> Vec<usize> {
    let k = rng.random_range(1..=polyphony_max);
    let mut ids: Vec<usize> = (0..classes).collect();
    // Partial Fisher-Yates: the first k entries are a uniform sample.
    for i in 0..k {
        let j = rng.random_range(i..classes);
        ids.swap(i, j);
    }
    let mut chosen = ids[..k].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Dataset generation parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetParams {
    pub families: Vec<SoundFamily>,
    pub n_clips: usize,
    pub polyphony_max: usize,
    pub sample_rate: u32,
    /// Clip duration range in seconds.
    pub duration_s: (f64, f64),
    /// Per-component level range in dB; wide ranges make weak components
    /// genuinely hard to detect.
    #[serde(default = "default_component_gain_db")]
    pub component_gain_db: (f64, f64),
    /// Broadband background-noise SNR range in dB relative to the mixed
    /// signal.
    #[serde(default = "default_background_snr_db")]
    pub background_snr_db: (f64, f64),
    pub seed: u64,
}

fn default_component_gain_db() -> (f64, f64) {
    (-15.0, 0.0)
}

fn default_background_snr_db() -> (f64, f64) {
    (3.0, 15.0)
}

impl DatasetParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.families.is_empty() {
            return Err(SynthError::InvalidParams("no sound families".into()));
        }
        if self.n_clips == 0 {
            return Err(SynthError::InvalidParams("n_clips must be positive".into()));
        }
        if self.polyphony_max == 0 || self.polyphony_max > self.families.len() {
            return Err(SynthError::InvalidParams(format!(
                "polyphony_max must be in 1..={}, got {}",
                self.families.len(),
                self.polyphony_max
            )));
        }
        if self.sample_rate == 0 {
            return Err(SynthError::InvalidParams("sample_rate must be positive".into()));
        }
        if self.duration_s.0 < 0.1 || self.duration_s.1 < self.duration_s.0 {
            return Err(SynthError::InvalidParams(format!(
                "bad duration range {:?}",
                self.duration_s
            )));
        }
        Ok(())
    }
}

const STREAM_DATASET: u64 = 0x11;
const STREAM_NOISE: u64 = 0x22;

/// Generate a dataset: WAV files under `<out_dir>/clips/` plus the manifest
/// rows describing them (paths relative to `out_dir`).
///
/// Every row derives its own seed from (seed, row index), so the result is
/// identical whether rows are synthesized serially or in parallel.
pub fn synth_dataset(out_dir: &Path, params: &DatasetParams) -> Result<Vec<ManifestRow>, SynthError> {
    params.validate()?;
    let clip_dir = out_dir.join("clips");
    std::fs::create_dir_all(&clip_dir).map_err(|e| SynthError::Io {
        path: clip_dir.display().to_string(),
        detail: e.to_string(),
    })?;
    let classes = params.families.len();

    let rows: Result<Vec<ManifestRow>, SynthError> = (0..params.n_clips)
        .into_par_iter()
        .map(|row_idx| {
            let mut rng = seeded_rng(derive_seed(params.seed, STREAM_DATASET, row_idx as u64));
            let chosen = sample_polyphony(classes, params.polyphony_max, &mut rng);
            let duration = sample_range(&mut rng, params.duration_s);
            let len = (duration * params.sample_rate as f64).round() as usize;

            let mut mix = vec![0f32; len];
            for (j, &class) in chosen.iter().enumerate() {
                let clip_seed = derive_seed(params.seed, STREAM_DATASET, (row_idx as u64) << 8 | (j as u64 + 1));
                let component = synth_clip(&params.families[class], duration, params.sample_rate, clip_seed);
                let gain_db = sample_range(&mut rng, params.component_gain_db);
                let gain = 10f64.powf(gain_db / 20.0) as f32;
                for (dst, &src) in mix.iter_mut().zip(&component.samples) {
                    *dst += src * gain;
                }
            }

            // Broadband background at a sampled SNR relative to the mix.
            let signal_power: f64 =
                mix.iter().map(|&s| (s as f64) * (s as f64)).sum::<f64>() / len as f64;
            if signal_power > 0.0 {
                let snr_db = sample_range(&mut rng, params.background_snr_db);
                // Uniform noise in [-1,1) has power 1/3.
                let noise_power = signal_power / 10f64.powf(snr_db / 10.0);
                let noise_scale = (3.0 * noise_power).sqrt() as f32;
                for dst in mix.iter_mut() {
                    *dst += rng.random_range(-1.0f32..1.0) * noise_scale;
                }
            }

            let peak = mix.iter().fold(0f32, |m, &s| m.max(s.abs()));
            if peak > 0.9 {
                let g = 0.9 / peak;
                for s in &mut mix {
                    *s *= g;
                }
            }

            let mut present = vec![false; classes];
            for &c in &chosen {
                present[c] = true;
            }
            let rel_path = format!("clips/clip_{row_idx:06}.wav");
            let clip = AudioClip::new(mix, params.sample_rate);
            write_wav_pcm16(out_dir.join(&rel_path), &clip)?;
            Ok(ManifestRow {
                path: rel_path,
                labels: TriStateLabelVector::from_binary(&present),
                duration_s: clip.duration_s(),
            })
        })
        .collect();
    rows
}

/// Label-noise parameters: independent per-(clip, class) flip rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Probability a true present label is recorded absent.
    pub fn_rate: f64,
    /// Probability a true absent label is recorded present.
    pub fp_rate: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        for (name, rate) in [("fn_rate", self.fn_rate), ("fp_rate", self.fp_rate)] {
            if !(0.0..=1.0).contains(&rate) || !rate.is_finite() {
                return Err(SynthError::InvalidParams(format!(
                    "{name} must be in [0,1], got {rate}"
                )));
            }
        }
        Ok(())
    }
}

/// Flip labels independently per (clip, class) with the configured rates.
///
/// The audio is untouched; callers keep the input rows as the ground-truth
/// sidecar.
pub fn inject_label_noise(
    rows: &[ManifestRow],
    spec: &NoiseSpec,
) -> Result<Vec<ManifestRow>, SynthError> {
    spec.validate()?;
    if rows.iter().any(|r| !r.labels.is_binary()) {
        return Err(SynthError::MaskedInput);
    }
    Ok(rows
        .iter()
        .enumerate()
        .map(|(row_idx, row)| {
            let mut rng = seeded_rng(derive_seed(spec.seed, STREAM_NOISE, row_idx as u64));
            let mut labels = row.labels.clone();
            for class in 0..labels.len() {
                match labels.get(class) {
                    LabelState::Present => {
                        if rng.random_bool(spec.fn_rate) {
                            labels.set(class, LabelState::Absent);
                        }
                    }
                    LabelState::Absent => {
                        if rng.random_bool(spec.fp_rate) {
                            labels.set(class, LabelState::Present);
                        }
                    }
                    LabelState::Masked => unreachable!("checked binary above"),
                }
            }
            ManifestRow {
                path: row.path.clone(),
                labels,
                duration_s: row.duration_s,
            }
        })
        .collect())
}
