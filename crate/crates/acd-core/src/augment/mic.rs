//! Post-microphone augmentation: clipping distortion and output level.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::AugmentError;
use crate::audio::AudioClip;
use crate::rng::Rng;

/// Microphone-path parameters. Zero probability and a (0,0) level range
/// make the stage the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MicAugmentConfig {
    /// Probability of applying tanh clipping distortion.
    pub clip_prob: f64,
    /// Distortion drive range; higher drive approaches hard clipping.
    pub drive: (f64, f64),
    /// Output gain range in dB.
    pub output_level_db: (f64, f64),
}

impl Default for MicAugmentConfig {
    fn default() -> Self {
        Self {
            clip_prob: 0.15,
            drive: (1.0, 8.0),
            output_level_db: (-12.0, 0.0),
        }
    }
}

impl MicAugmentConfig {
    pub fn disabled() -> Self {
        Self {
            clip_prob: 0.0,
            drive: (0.0, 0.0),
            output_level_db: (0.0, 0.0),
        }
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        if !(0.0..=1.0).contains(&self.clip_prob) {
            return Err(AugmentError::InvalidConfig(format!(
                "clip_prob must be in [0,1], got {}",
                self.clip_prob
            )));
        }
        Ok(())
    }
}

fn sample_range(rng: &mut Rng, range: (f64, f64)) -> f64 {
    if range.0 >= range.1 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    }
}

/// Apply optional tanh clipping with sampled drive, then a sampled output
/// gain, then a hard limit to [-1, 1].
pub fn mic_augment(mix: &AudioClip, cfg: &MicAugmentConfig, rng: &mut Rng) -> AudioClip {
    let mut samples = mix.samples.clone();
    if cfg.clip_prob > 0.0 && rng.random_bool(cfg.clip_prob) {
        let drive = sample_range(rng, cfg.drive).max(1e-3);
        let norm = drive.tanh() as f32;
        for s in &mut samples {
            *s = (*s as f64 * drive).tanh() as f32 / norm;
        }
    }
    if cfg.output_level_db != (0.0, 0.0) {
        let gain_db = sample_range(rng, cfg.output_level_db);
        let gain = 10f64.powf(gain_db / 20.0) as f32;
        for s in &mut samples {
            *s *= gain;
        }
    }
    for s in &mut samples {
        *s = s.clamp(-1.0, 1.0);
    }
    AudioClip::new(samples, mix.sample_rate)
}
