//! Desk-scale pipeline for multi-label (polyphonic) audio content detection
//! under noisy labels.
//!
//! The crate is organized around the stages of the pipeline:
//!
//! - [`audio`]: WAV input, STFT analysis and compressed complex spectral
//!   features.
//! - [`synth`]: synthetic polyphonic datasets with ground-truth labels and
//!   controlled label-noise injection.
//! - [`augment`]: training-sequence construction (crop/concat, source and
//!   microphone augmentation, multi-source mixing with OR label joining).
//! - [`labels`]: tri-state label algebra, teacher-based label correction and
//!   masking, and prior-work baselines.
//! - [`model`]: a compact dense multi-label classifier with hand-derived
//!   gradients, masked binary cross-entropy and AdamW.
//! - [`metrics`]: precision-recall curves, average precision, mAP and
//!   class-average accuracy.
//!
//! Numeric kernels (model, loss, optimizer, metrics, STFT) are generic over
//! the scalar type via [`Scalar`]; the training path runs in `f32` while
//! verification oracles recompute in `f64`.

pub mod audio;
pub mod augment;
pub mod labels;
pub mod manifest;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod synth;

pub use scalar::Scalar;

/// Scalar used on the training path.
pub type TrainFloat = f32;
/// Scalar used by verification oracles and gradient checks.
pub type CheckFloat = f64;

/// Network type consumed by the trainer and the CLI.
pub type TrainNetwork = model::Network<TrainFloat>;
