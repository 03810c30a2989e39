//! End-to-end training behavior on small synthetic pools.

use std::path::Path;

use acd_core::augment::{AugmentConfig, ClipPool, MicAugmentConfig, MixupConfig, MixupMode, SourceAugmentConfig};
use acd_core::audio::StftConfig;
use acd_core::labels::write_teacher_jsonl;
use acd_core::manifest::{write_manifest, ManifestRow};
use acd_core::model::{pool_dataset, predict, train, TrainerConfig};
use acd_core::synth::{default_families, synth_dataset, DatasetParams};

const RATE: u32 = 8_000;

fn make_dataset(dir: &Path, classes: usize, n_clips: usize, seed: u64) -> Vec<ManifestRow> {
    let params = DatasetParams {
        families: default_families(classes).unwrap(),
        n_clips,
        polyphony_max: 1,
        sample_rate: RATE,
        duration_s: (1.0, 2.0),
        component_gain_db: (-3.0, 0.0),
        background_snr_db: (20.0, 30.0),
        seed,
    };
    let rows = synth_dataset(dir, &params).unwrap();
    write_manifest(dir.join("manifest.jsonl"), &rows).unwrap();
    rows
}

fn toy_augment() -> AugmentConfig {
    AugmentConfig {
        mixup: MixupConfig {
            i_max: 2,
            sigma_s_db: 2.0,
            sequence_length_s: 1.0,
            min_crop_s: 0.5,
            mode: MixupMode::LabelJoin,
        },
        source: SourceAugmentConfig::disabled(),
        mic: MicAugmentConfig::disabled(),
    }
}

fn toy_trainer(epochs: usize, epoch_sequences: usize, seed: u64) -> TrainerConfig {
    TrainerConfig {
        learning_rate: 3e-3,
        weight_decay: 1e-4,
        batch_size: 16,
        epoch_sequences,
        plateau_patience_epochs: 10,
        lr_halving_factor: 0.5,
        max_epochs: epochs,
        hidden: vec![32],
        seed,
    }
}

#[test]
fn separable_three_class_set_converges() {
    let dir = tempfile::tempdir().unwrap();
    make_dataset(dir.path(), 3, 24, 11);
    let val_dir = tempfile::tempdir().unwrap();
    make_dataset(val_dir.path(), 3, 12, 12);

    let stft = StftConfig::default();
    let pool = ClipPool::load(dir.path().join("manifest.jsonl"), RATE).unwrap();
    let val_pool = ClipPool::load(val_dir.path().join("manifest.jsonl"), RATE).unwrap();
    let val = pool_dataset(&val_pool, &stft).unwrap();

    let outcome = train(&pool, &val, &toy_augment(), &stft, &toy_trainer(50, 64, 1)).unwrap();
    let min_loss = outcome
        .history
        .iter()
        .map(|r| r.train_loss)
        .fold(f64::INFINITY, f64::min);
    assert!(
        min_loss < 0.1,
        "training loss never fell below 0.1 (best {min_loss:.4})"
    );
    let final_map = outcome.history.last().unwrap().val_map;
    assert!(final_map > 0.9, "validation mAP stuck at {final_map:.3}");
}

#[test]
fn training_is_deterministic_given_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    make_dataset(dir.path(), 3, 12, 21);
    let stft = StftConfig::default();
    let pool = ClipPool::load(dir.path().join("manifest.jsonl"), RATE).unwrap();
    let val = pool_dataset(&pool, &stft).unwrap();

    let cfg = toy_trainer(3, 32, 7);
    let a = train(&pool, &val, &toy_augment(), &stft, &cfg).unwrap();
    let b = train(&pool, &val, &toy_augment(), &stft, &cfg).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.network.flatten(), b.network.flatten());
}

#[test]
fn trained_model_predicts_the_synthesized_family() {
    let dir = tempfile::tempdir().unwrap();
    let rows = make_dataset(dir.path(), 3, 30, 31);
    let stft = StftConfig::default();
    let pool = ClipPool::load(dir.path().join("manifest.jsonl"), RATE).unwrap();
    let pooled = pool_dataset(&pool, &stft).unwrap();

    let outcome = train(&pool, &pooled, &toy_augment(), &stft, &toy_trainer(40, 64, 3)).unwrap();
    let preds = predict(&outcome.network, &pooled).unwrap();

    let mut correct = 0usize;
    for row in &rows {
        let probs = preds.get(&row.path).unwrap();
        let argmax = probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let truth = row
            .labels
            .iter()
            .position(|s| s == acd_core::labels::LabelState::Present)
            .unwrap();
        if argmax == truth {
            correct += 1;
        }
    }
    assert!(
        correct * 10 >= rows.len() * 9,
        "only {correct}/{} clips predicted correctly",
        rows.len()
    );

    // Prediction files are byte-identical across runs.
    let p1 = dir.path().join("preds1.jsonl");
    let p2 = dir.path().join("preds2.jsonl");
    write_teacher_jsonl(&p1, &preds).unwrap();
    let preds_again = predict(&outcome.network, &pooled).unwrap();
    write_teacher_jsonl(&p2, &preds_again).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
}
