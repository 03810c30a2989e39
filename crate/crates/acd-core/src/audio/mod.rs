//! Audio input, STFT analysis and compressed spectral feature extraction.

mod feature;
mod stft;
mod wav;

pub use feature::{
    featurize, read_feature, to_spectrogram, write_feature, SpectralFeature, FEATURE_MAGIC,
};
pub use stft::{compress, frame_count, stft, Spectrogram, StftConfig};
pub use wav::{load_wav, write_wav, write_wav_pcm16};

use std::path::PathBuf;
use thiserror::Error;

/// A mono audio signal with its sample rate.
///
/// Samples are dimensionless amplitudes, nominally in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Self {
        assert!(sample_rate > 0, "sample rate must be positive");
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("file not found: {0}")]
    Missing(PathBuf),
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported or corrupt WAV {path}: {detail}")]
    UnsupportedWav { path: PathBuf, detail: String },
    #[error("WAV has zero-length payload: {0}")]
    EmptyPayload(PathBuf),
    #[error("clip of {samples} samples is shorter than one {window}-sample analysis window")]
    ClipTooShort { samples: usize, window: usize },
    #[error("sample rate {found} Hz does not match configured {expected} Hz ({path})")]
    SampleRateMismatch {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error("invalid feature extraction config: {0}")]
    InvalidConfig(String),
    #[error("corrupt feature file {path}: {detail}")]
    CorruptFeature { path: PathBuf, detail: String },
}
