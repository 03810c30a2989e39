//! Training-sequence generation: sample clips of a target class, crop and
//! concatenate them to the sequence length, augment and mix multiple
//! sources, and join their labels.

use std::path::{Path, PathBuf};

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{mic_augment, source_augment, AugmentConfig, AugmentError, MixupMode};
use crate::audio::{featurize, load_wav, AudioClip, AudioError, SpectralFeature, StftConfig};
use crate::labels::{LabelState, TriStateLabelVector};
use crate::manifest::{read_manifest, ManifestRow};
use crate::rng::{derive_seed, seeded_rng, Rng};

/// A dataset of labeled clips addressable by class.
#[derive(Debug, Clone)]
pub struct ClipPool {
    root: PathBuf,
    rows: Vec<ManifestRow>,
    by_class: Vec<Vec<usize>>,
    sample_rate: u32,
}

impl ClipPool {
    /// Load a manifest; clip paths resolve relative to its directory.
    /// Clips whose sample rate differs from `sample_rate` fail on read.
    pub fn load(manifest_path: impl AsRef<Path>, sample_rate: u32) -> Result<Self, AugmentError> {
        let manifest_path = manifest_path.as_ref();
        let rows = read_manifest(manifest_path)?;
        let root = manifest_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .to_path_buf();
        Ok(Self::from_rows(root, rows, sample_rate))
    }

    pub fn from_rows(root: PathBuf, rows: Vec<ManifestRow>, sample_rate: u32) -> Self {
        let classes = rows.first().map_or(0, |r| r.labels.len());
        let mut by_class = vec![Vec::new(); classes];
        for (idx, row) in rows.iter().enumerate() {
            for (class, state) in row.labels.iter().enumerate() {
                if state == LabelState::Present {
                    by_class[class].push(idx);
                }
            }
        }
        Self {
            root,
            rows,
            by_class,
            sample_rate,
        }
    }

    pub fn rows(&self) -> &[ManifestRow] {
        &self.rows
    }

    pub fn classes(&self) -> usize {
        self.by_class.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Classes that have at least one clip with the class present.
    pub fn populated_classes(&self) -> Vec<usize> {
        (0..self.classes())
            .filter(|&c| !self.by_class[c].is_empty())
            .collect()
    }

    /// Read one clip from disk, enforcing the pool's sample rate.
    pub fn clip(&self, idx: usize) -> Result<AudioClip, AugmentError> {
        let row = &self.rows[idx];
        let path = self.root.join(&row.path);
        let clip = load_wav(&path)?;
        if clip.sample_rate != self.sample_rate {
            return Err(AugmentError::Audio(AudioError::SampleRateMismatch {
                path,
                found: clip.sample_rate,
                expected: self.sample_rate,
            }));
        }
        Ok(clip)
    }
}

/// Per-class training targets of one sequence: `None` is masked, values may
/// be fractional in weighted mode.
pub type SequenceLabels = Vec<Option<f32>>;

/// Provenance of one generated sequence, used by soundness checks.
#[derive(Debug, Clone)]
pub struct SequenceTrace {
    pub target_class: usize,
    /// Pool row indices of every clip that contributed audio.
    pub contributing_rows: Vec<usize>,
    /// Joined label vector of each source track.
    pub source_labels: Vec<TriStateLabelVector>,
    /// Source gains in dB (label-join and single-source modes).
    pub gains_db: Vec<f64>,
    /// Mixing factor of weighted mode.
    pub alpha: Option<f32>,
    /// Post-gain source signals, populated only by the traced entry point.
    pub sources: Vec<Vec<f32>>,
}

/// Crop a random piece of at least `min_crop` samples (the whole clip when
/// it is shorter than that).
fn crop_random(clip: &AudioClip, min_crop: usize, rng: &mut Rng) -> Vec<f32> {
    let len = clip.len();
    if len <= min_crop {
        return clip.samples.clone();
    }
    let crop_len = rng.random_range(min_crop..=len);
    let start = rng.random_range(0..=len - crop_len);
    clip.samples[start..start + crop_len].to_vec()
}

/// Build one source track for a class: crop and concatenate clips with the
/// class present until the track reaches `length` samples, then truncate.
/// Returns the track, the joined labels of every contributing clip, and the
/// contributing row indices.
pub fn sample_source_track(
    pool: &ClipPool,
    class_id: usize,
    length: usize,
    min_crop: usize,
    rng: &mut Rng,
) -> Result<(AudioClip, TriStateLabelVector, Vec<usize>), AugmentError> {
    let candidates = pool
        .by_class
        .get(class_id)
        .filter(|c| !c.is_empty())
        .ok_or(AugmentError::EmptyClassPool(class_id))?;

    let mut samples: Vec<f32> = Vec::with_capacity(length);
    let mut labels: Option<TriStateLabelVector> = None;
    let mut used = Vec::new();
    while samples.len() < length {
        let idx = candidates[rng.random_range(0..candidates.len())];
        let clip = pool.clip(idx)?;
        samples.extend(crop_random(&clip, min_crop, rng));
        let row_labels = &pool.rows[idx].labels;
        labels = Some(match labels {
            None => row_labels.clone(),
            Some(joined) => joined.join_masked(row_labels)?,
        });
        used.push(idx);
    }
    samples.truncate(length);
    Ok((
        AudioClip::new(samples, pool.sample_rate),
        labels.expect("loop ran at least once"),
        used,
    ))
}

fn tri_to_targets(labels: &TriStateLabelVector) -> SequenceLabels {
    labels.iter().map(|s| s.target()).collect()
}

fn generate_inner(
    pool: &ClipPool,
    cfg: &AugmentConfig,
    rng: &mut Rng,
    keep_sources: bool,
) -> Result<(AudioClip, SequenceLabels, SequenceTrace), AugmentError> {
    cfg.validate()?;
    if pool.is_empty() {
        return Err(AugmentError::EmptyPool);
    }
    let populated = pool.populated_classes();
    if populated.is_empty() {
        return Err(AugmentError::EmptyPool);
    }
    let length = (cfg.mixup.sequence_length_s * pool.sample_rate as f64).round() as usize;
    let min_crop = (cfg.mixup.min_crop_s * pool.sample_rate as f64).round() as usize;

    let target_class = populated[rng.random_range(0..populated.len())];
    let n_sources = match cfg.mixup.mode {
        MixupMode::None => 1,
        MixupMode::LabelJoin => rng.random_range(1..=cfg.mixup.i_max),
        MixupMode::Weighted => 2,
    };
    let alpha: Option<f32> = match cfg.mixup.mode {
        MixupMode::Weighted => Some(rng.random_range(0.0..1.0)),
        _ => None,
    };
    let gain_dist = Normal::new(0.0, cfg.mixup.sigma_s_db)
        .map_err(|e| AugmentError::InvalidConfig(format!("gain distribution: {e}")))?;

    let mut mix = vec![0f32; length];
    let mut joined: Option<TriStateLabelVector> = None;
    let mut trace = SequenceTrace {
        target_class,
        contributing_rows: Vec::new(),
        source_labels: Vec::new(),
        gains_db: Vec::new(),
        alpha,
        sources: Vec::new(),
    };

    for source_idx in 0..n_sources {
        let class = if source_idx == 0 || cfg.mixup.mode != MixupMode::Weighted {
            target_class
        } else {
            // Weighted mixing interpolates two independent samples.
            populated[rng.random_range(0..populated.len())]
        };
        let (track, track_labels, rows) =
            sample_source_track(pool, class, length, min_crop, rng)?;
        let track = source_augment(&track, &cfg.source, rng);

        let gain = match cfg.mixup.mode {
            MixupMode::None => 1.0f32,
            MixupMode::LabelJoin => {
                let gain_db = gain_dist.sample(rng);
                trace.gains_db.push(gain_db);
                10f64.powf(gain_db / 20.0) as f32
            }
            MixupMode::Weighted => {
                let a = alpha.expect("weighted mode sampled alpha");
                if source_idx == 0 {
                    a
                } else {
                    1.0 - a
                }
            }
        };

        if keep_sources {
            trace
                .sources
                .push(track.samples.iter().map(|&s| s * gain).collect());
        }
        for (dst, &src) in mix.iter_mut().zip(&track.samples) {
            *dst += src * gain;
        }
        trace.contributing_rows.extend(rows);
        joined = Some(match joined {
            None => track_labels.clone(),
            Some(acc) => acc.join_masked(&track_labels)?,
        });
        trace.source_labels.push(track_labels);
    }

    let labels: SequenceLabels = match cfg.mixup.mode {
        MixupMode::Weighted => {
            let a = alpha.expect("weighted mode sampled alpha");
            let y1 = &trace.source_labels[0];
            let y2 = &trace.source_labels[1];
            (0..y1.len())
                .map(|c| match (y1.get(c).target(), y2.get(c).target()) {
                    (Some(l), Some(r)) => Some(a * l + (1.0 - a) * r),
                    _ => None,
                })
                .collect()
        }
        _ => tri_to_targets(joined.as_ref().expect("at least one source")),
    };

    let sequence = mic_augment(
        &AudioClip::new(mix, pool.sample_rate),
        &cfg.mic,
        rng,
    );
    Ok((sequence, labels, trace))
}

/// Generate one training sequence (audio plus per-class targets).
pub fn generate_training_sequence(
    pool: &ClipPool,
    cfg: &AugmentConfig,
    rng: &mut Rng,
) -> Result<(AudioClip, SequenceLabels), AugmentError> {
    let (clip, labels, _) = generate_inner(pool, cfg, rng, false)?;
    Ok((clip, labels))
}

/// Like [`generate_training_sequence`] but returns full provenance,
/// including the post-gain source signals.
pub fn generate_training_sequence_traced(
    pool: &ClipPool,
    cfg: &AugmentConfig,
    rng: &mut Rng,
) -> Result<(AudioClip, SequenceLabels, SequenceTrace), AugmentError> {
    generate_inner(pool, cfg, rng, true)
}

const STREAM_AUGMENT: u64 = 0x33;

/// Assemble one featurized batch.
///
/// Every sequence derives its seed from (seed, epoch, global sequence
/// index), so batches are identical whether sequences are generated
/// serially or by parallel workers.
pub fn assemble_batch(
    pool: &ClipPool,
    cfg: &AugmentConfig,
    stft_cfg: &StftConfig,
    batch_size: usize,
    seed: u64,
    epoch: usize,
    batch_idx: usize,
) -> Result<Vec<(SpectralFeature, SequenceLabels)>, AugmentError> {
    if batch_size == 0 {
        return Err(AugmentError::InvalidConfig("batch_size must be >= 1".into()));
    }
    let epoch_seed = derive_seed(seed, STREAM_AUGMENT, epoch as u64);
    (0..batch_size)
        .into_par_iter()
        .map(|j| {
            let sequence_index = (batch_idx * batch_size + j) as u64;
            let mut rng = seeded_rng(derive_seed(epoch_seed, 0, sequence_index));
            let (clip, labels) = generate_training_sequence(pool, cfg, &mut rng)?;
            let feature = featurize(&clip, stft_cfg)?;
            Ok((feature, labels))
        })
        .collect()
}
