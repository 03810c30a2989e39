//! Training loop: sequence batches, masked BCE, AdamW and plateau
//! learning-rate scheduling with mAP as the validation metric.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{masked_bce, pool, AdamW, LabelMatrix, Matrix, ModelConfig, ModelError, Network, OptimizerConfig};
use crate::augment::{assemble_batch, AugmentConfig, AugmentError, ClipPool};
use crate::audio::{featurize, StftConfig};
use crate::labels::{TeacherPredictions, TriStateLabelVector};
use crate::metrics::{evaluate, MetricError};
use crate::rng::derive_seed;

/// Improvement below this margin does not reset the plateau counter.
pub const PLATEAU_MIN_DELTA: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    /// Training sequences per epoch.
    pub epoch_sequences: usize,
    pub plateau_patience_epochs: usize,
    pub lr_halving_factor: f64,
    pub max_epochs: usize,
    /// Hidden layer widths of the classifier.
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            weight_decay: 1e-4,
            batch_size: 32,
            epoch_sequences: 10_000,
            plateau_patience_epochs: 10,
            lr_halving_factor: 0.5,
            max_epochs: 50,
            hidden: vec![128, 64],
            seed: 0,
        }
    }
}

impl TrainerConfig {
    /// Settings for long full-scale runs: one epoch of 10k sequences and a
    /// patience of 150 epochs before the learning rate halves.
    pub fn large_scale() -> Self {
        Self {
            plateau_patience_epochs: 150,
            max_epochs: 1_000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.learning_rate <= 0.0
            || self.weight_decay < 0.0
            || self.batch_size == 0
            || self.epoch_sequences == 0
            || self.plateau_patience_epochs == 0
            || self.max_epochs == 0
        {
            return Err(TrainError::InvalidConfig(
                "rates and sizes must be positive".into(),
            ));
        }
        if !(self.lr_halving_factor > 0.0 && self.lr_halving_factor < 1.0) {
            return Err(TrainError::InvalidConfig(format!(
                "lr_halving_factor must be in (0,1), got {}",
                self.lr_halving_factor
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid trainer config: {0}")]
    InvalidConfig(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Audio(#[from] crate::audio::AudioError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// One epoch of the training history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_map: f64,
    pub lr: f64,
}

/// Halve-on-plateau scheduling: the learning rate is multiplied by `factor`
/// after `patience` consecutive epochs without the metric improving by more
/// than [`PLATEAU_MIN_DELTA`].
#[derive(Debug, Clone)]
pub struct PlateauScheduler {
    best: f64,
    stale_epochs: usize,
    patience: usize,
    factor: f64,
}

impl PlateauScheduler {
    pub fn new(patience: usize, factor: f64) -> Self {
        Self {
            best: f64::NEG_INFINITY,
            stale_epochs: 0,
            patience,
            factor,
        }
    }

    /// Feed one epoch's metric; returns true when the rate was reduced.
    pub fn observe(&mut self, metric: f64, lr: &mut f64) -> bool {
        if metric > self.best + PLATEAU_MIN_DELTA {
            self.best = metric;
            self.stale_epochs = 0;
            return false;
        }
        self.stale_epochs += 1;
        if self.stale_epochs >= self.patience {
            *lr *= self.factor;
            self.stale_epochs = 0;
            return true;
        }
        false
    }
}

/// A dataset reduced to pooled feature rows, ready for forward passes.
#[derive(Debug, Clone)]
pub struct PooledDataset {
    pub features: Matrix<f32>,
    pub labels: Vec<TriStateLabelVector>,
    pub clip_ids: Vec<String>,
}

impl PooledDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Featurize and pool every clip of a pool (parallel, order-preserving).
pub fn pool_dataset(clips: &ClipPool, stft_cfg: &StftConfig) -> Result<PooledDataset, TrainError> {
    let rows: Result<Vec<(Vec<f32>, TriStateLabelVector, String)>, TrainError> = clips
        .rows()
        .par_iter()
        .enumerate()
        .map(|(idx, row)| {
            let clip = clips.clip(idx)?;
            let feature = featurize(&clip, stft_cfg)?;
            let pooled = pool::<f32>(&feature)?;
            Ok((pooled, row.labels.clone(), row.path.clone()))
        })
        .collect();
    let rows = rows?;
    let features = Matrix::from_rows(rows.iter().map(|(f, _, _)| f.clone()).collect());
    Ok(PooledDataset {
        features,
        labels: rows.iter().map(|(_, l, _)| l.clone()).collect(),
        clip_ids: rows.into_iter().map(|(_, _, id)| id).collect(),
    })
}

/// Forward a pooled dataset and return per-row probabilities as f64.
fn forward_probs(net: &Network<f32>, data: &PooledDataset) -> Result<Vec<Vec<f64>>, ModelError> {
    let probs = net.forward(&data.features)?;
    Ok((0..probs.rows)
        .map(|r| probs.row(r).iter().map(|&p| p as f64).collect())
        .collect())
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: Network<f32>,
    pub history: Vec<EpochRecord>,
}

const STREAM_INIT: u64 = 0x44;

/// Train a classifier on sequences generated from `train_pool`, validating
/// each epoch on `val_set` with mAP at threshold 0.5.
///
/// Deterministic given the config seed. A non-finite loss aborts with a
/// diagnostic naming the epoch and batch.
pub fn train(
    train_pool: &ClipPool,
    val_set: &PooledDataset,
    aug_cfg: &AugmentConfig,
    stft_cfg: &StftConfig,
    cfg: &TrainerConfig,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    if train_pool.is_empty() {
        return Err(TrainError::Augment(AugmentError::EmptyPool));
    }
    if val_set.is_empty() {
        return Err(TrainError::InvalidConfig("empty validation set".into()));
    }
    let classes = train_pool.classes();
    let bins = stft_cfg.bins(train_pool.sample_rate());
    let model_cfg = ModelConfig::new(2 * bins, &cfg.hidden, classes);
    let mut net = Network::<f32>::init(&model_cfg, derive_seed(cfg.seed, STREAM_INIT, 0));
    let mut opt = AdamW::new(
        OptimizerConfig {
            weight_decay: cfg.weight_decay,
            ..OptimizerConfig::default()
        },
        net.num_params(),
    );
    let mut scheduler = PlateauScheduler::new(cfg.plateau_patience_epochs, cfg.lr_halving_factor);
    let mut lr = cfg.learning_rate;
    let batches_per_epoch = cfg.epoch_sequences.div_ceil(cfg.batch_size);
    let mut history = Vec::with_capacity(cfg.max_epochs);

    for epoch in 0..cfg.max_epochs {
        let mut loss_sum = 0.0f64;
        for batch_idx in 0..batches_per_epoch {
            let batch = assemble_batch(
                train_pool,
                aug_cfg,
                stft_cfg,
                cfg.batch_size,
                cfg.seed,
                epoch,
                batch_idx,
            )?;
            let pooled: Result<Vec<Vec<f32>>, ModelError> = batch
                .par_iter()
                .map(|(feature, _)| pool::<f32>(feature))
                .collect();
            let features = Matrix::from_rows(pooled?);
            let labels = LabelMatrix::from_rows(
                batch.iter().map(|(_, l)| l.clone()).collect::<Vec<_>>(),
            );

            let cache = net.forward_cached(&features)?;
            let (loss, _) = masked_bce(&cache.probs, &labels)?;
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    epoch: epoch + 1,
                    batch: batch_idx,
                });
            }
            loss_sum += loss as f64;
            let grads = net.backward(&cache, &labels)?;
            opt.step(&mut net, &grads, lr);
        }

        let probs = forward_probs(&net, val_set)?;
        let val_map = evaluate(&probs, &val_set.labels, 0.5)?.mean_ap;
        let record = EpochRecord {
            epoch: epoch + 1,
            train_loss: loss_sum / batches_per_epoch as f64,
            val_map,
            lr,
        };
        history.push(record);
        scheduler.observe(val_map, &mut lr);
    }

    Ok(TrainOutcome {
        network: net,
        history,
    })
}

/// Per-clip predictions over a pooled dataset, keyed by clip id.
pub fn predict(
    net: &Network<f32>,
    data: &PooledDataset,
) -> Result<TeacherPredictions, ModelError> {
    let mut preds = TeacherPredictions::new();
    if data.is_empty() {
        return Ok(preds);
    }
    let probs = forward_probs(net, data)?;
    for (clip_id, row) in data.clip_ids.iter().zip(probs) {
        preds.insert(clip_id.clone(), row);
    }
    Ok(preds)
}

/// Write the history CSV (`epoch,train_loss,val_map,lr`).
pub fn write_history_csv(path: impl AsRef<Path>, history: &[EpochRecord]) -> std::io::Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "epoch,train_loss,val_map,lr")?;
    for r in history {
        writeln!(out, "{},{},{},{}", r.epoch, r.train_loss, r.val_map, r.lr)?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_halves_every_epoch_after_the_first_when_decreasing() {
        let mut scheduler = PlateauScheduler::new(1, 0.5);
        let mut lr = 1.0;
        let metrics = [0.9, 0.8, 0.7, 0.6];
        let mut halvings = Vec::new();
        for m in metrics {
            halvings.push(scheduler.observe(m, &mut lr));
        }
        assert_eq!(halvings, vec![false, true, true, true]);
        assert!((lr - 0.125).abs() < 1e-12);
    }

    #[test]
    fn plateau_resets_on_improvement() {
        let mut scheduler = PlateauScheduler::new(2, 0.5);
        let mut lr = 1.0;
        assert!(!scheduler.observe(0.5, &mut lr));
        assert!(!scheduler.observe(0.4, &mut lr)); // stale 1
        assert!(!scheduler.observe(0.6, &mut lr)); // improvement resets
        assert!(!scheduler.observe(0.5, &mut lr)); // stale 1
        assert!(scheduler.observe(0.5, &mut lr)); // stale 2 -> halve
        assert!((lr - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tiny_improvements_do_not_reset() {
        let mut scheduler = PlateauScheduler::new(1, 0.5);
        let mut lr = 1.0;
        scheduler.observe(0.5, &mut lr);
        // Below the 1e-4 margin: still a plateau.
        assert!(scheduler.observe(0.500_05, &mut lr));
        assert!((lr - 0.5).abs() < 1e-12);
    }

    #[test]
    fn trainer_config_validation() {
        let mut cfg = TrainerConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.lr_halving_factor = 1.0;
        assert!(cfg.validate().is_err());
        cfg = TrainerConfig {
            batch_size: 0,
            ..TrainerConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn history_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("history.csv");
        let history = vec![
            EpochRecord {
                epoch: 1,
                train_loss: 0.5,
                val_map: 0.25,
                lr: 1e-4,
            },
            EpochRecord {
                epoch: 2,
                train_loss: 0.25,
                val_map: 0.5,
                lr: 1e-4,
            },
        ];
        write_history_csv(&path, &history).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "epoch,train_loss,val_map,lr\n1,0.5,0.25,0.0001\n2,0.25,0.5,0.0001\n"
        );
    }

    #[test]
    fn predict_on_empty_dataset_is_empty() {
        let net = Network::<f32>::init(&ModelConfig::new(4, &[3], 2), 0);
        let data = PooledDataset {
            features: Matrix::zeros(0, 4),
            labels: vec![],
            clip_ids: vec![],
        };
        let preds = predict(&net, &data).unwrap();
        assert!(preds.is_empty());
    }
}
