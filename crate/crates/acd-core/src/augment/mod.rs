//! Training-sequence construction: clip sampling, cropping and
//! concatenation, source and microphone augmentation chains, multi-source
//! mixing and label joining.

mod mic;
mod sequence;
mod source;

pub use mic::{mic_augment, MicAugmentConfig};
pub use sequence::{
    assemble_batch, generate_training_sequence, generate_training_sequence_traced,
    sample_source_track, ClipPool, SequenceLabels, SequenceTrace,
};
pub use source::{source_augment, SourceAugmentConfig};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioError;
use crate::labels::LabelError;
use crate::manifest::ManifestError;

/// How sources are combined into one training sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixupMode {
    /// Single source, unit gain.
    None,
    /// 1..i_max sources summed with dB gains; labels joined with OR.
    LabelJoin,
    /// Exactly two sources mixed with factors alpha and 1-alpha applied to
    /// both audio and labels (the weighted-interpolation comparison mode).
    Weighted,
}

/// Multi-source mixing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MixupConfig {
    /// Maximum number of sources per sequence.
    pub i_max: usize,
    /// Standard deviation of the per-source gain in dB.
    pub sigma_s_db: f64,
    /// Training sequence length in seconds.
    pub sequence_length_s: f64,
    /// Minimum length of one cropped piece in seconds (when the source file
    /// allows).
    pub min_crop_s: f64,
    pub mode: MixupMode,
}

impl Default for MixupConfig {
    fn default() -> Self {
        Self {
            i_max: 2,
            sigma_s_db: 2.0,
            sequence_length_s: 10.0,
            min_crop_s: 5.0,
            mode: MixupMode::LabelJoin,
        }
    }
}

impl MixupConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if self.i_max < 1 {
            return Err(AugmentError::InvalidConfig("i_max must be >= 1".into()));
        }
        if self.mode == MixupMode::Weighted && self.i_max != 2 {
            return Err(AugmentError::InvalidConfig(
                "weighted mode requires i_max = 2".into(),
            ));
        }
        if !(self.sequence_length_s > 0.0) {
            return Err(AugmentError::InvalidConfig(
                "sequence_length_s must be positive".into(),
            ));
        }
        if self.min_crop_s > self.sequence_length_s {
            return Err(AugmentError::InvalidConfig(format!(
                "min_crop_s {} exceeds sequence_length_s {}",
                self.min_crop_s, self.sequence_length_s
            )));
        }
        if self.sigma_s_db < 0.0 || !self.sigma_s_db.is_finite() {
            return Err(AugmentError::InvalidConfig(
                "sigma_s_db must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Bundled augmentation parameters for the whole sequence pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct AugmentConfig {
    pub mixup: MixupConfig,
    pub source: SourceAugmentConfig,
    pub mic: MicAugmentConfig,
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        self.mixup.validate()?;
        self.source.validate()?;
        self.mic.validate()
    }
}

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("invalid augmentation config: {0}")]
    InvalidConfig(String),
    #[error("pool has no clips")]
    EmptyPool,
    #[error("pool has no clip with class {0} present")]
    EmptyClassPool(usize),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Label(#[from] LabelError),
}
