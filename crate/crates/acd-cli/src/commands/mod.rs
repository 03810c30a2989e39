//! Subcommand implementations.

mod experiment;

pub use experiment::{cmd_experiment, cmd_report};

use std::path::{Path, PathBuf};

use acd_core::augment::{generate_training_sequence, ClipPool};
use acd_core::audio::write_wav;
use acd_core::labels::{
    enhance_dataset, meanthresh_correct_baseline, percentile_baseline, read_teacher_jsonl,
    write_teacher_jsonl, EnhancementConfig, PercentileAction, PercentileDirection,
    TeacherPredictions,
};
use acd_core::manifest::{read_manifest, truth_sidecar_path, write_manifest, ManifestRow};
use acd_core::metrics::{evaluate, pr_curves_csv, render_ap_svg, EvalResult};
use acd_core::model::{
    load_checkpoint, pool_dataset, predict, save_checkpoint, train, write_history_csv, Network,
    PooledDataset, TrainerConfig,
};
use acd_core::rng::{derive_seed, seeded_rng};
use acd_core::synth::{default_families, inject_label_noise, synth_dataset, DatasetParams, NoiseSpec};

use crate::config::{ExperimentConfig, Mode};
use crate::CliError;

pub(crate) const STREAM_DATASET: u64 = 1;
pub(crate) const STREAM_NOISE: u64 = 2;

fn mkdir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(format!("serialize {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| CliError::Data(format!("write {}: {e}", path.display())))
}

/// Dataset parameters of the config for one purpose-specific split.
pub(crate) fn dataset_params(
    cfg: &ExperimentConfig,
    n_clips: usize,
    stream_index: u64,
) -> Result<DatasetParams, CliError> {
    Ok(DatasetParams {
        families: default_families(cfg.data.classes)?,
        n_clips,
        polyphony_max: cfg.data.polyphony_max,
        sample_rate: cfg.data.sample_rate,
        duration_s: cfg.data.duration_s,
        component_gain_db: cfg.data.component_gain_db,
        background_snr_db: cfg.data.background_snr_db,
        seed: derive_seed(cfg.seed, STREAM_DATASET, stream_index),
    })
}

/// Generate clips plus manifest, inject label noise per the config, and
/// keep the clean labels as the truth sidecar.
pub fn cmd_synth(
    cfg: &ExperimentConfig,
    out: &Path,
    clips: Option<usize>,
) -> Result<(), CliError> {
    let params = dataset_params(cfg, clips.unwrap_or(cfg.data.train_clips), 0)?;
    mkdir(out)?;
    let clean = synth_dataset(out, &params)?;
    let spec = NoiseSpec {
        fn_rate: cfg.data.fn_rate,
        fp_rate: cfg.data.fp_rate,
        seed: derive_seed(cfg.seed, STREAM_NOISE, 0),
    };
    let noisy = inject_label_noise(&clean, &spec)?;
    let manifest_path = out.join("manifest.jsonl");
    write_manifest(&manifest_path, &noisy)?;
    write_manifest(truth_sidecar_path(&manifest_path), &clean)?;
    println!(
        "wrote {} clips to {} (fn_rate {}, fp_rate {})",
        noisy.len(),
        out.display(),
        spec.fn_rate,
        spec.fp_rate
    );
    Ok(())
}

fn load_pool(
    manifest: &Path,
    data_root: Option<&Path>,
    sample_rate: u32,
) -> Result<ClipPool, CliError> {
    let rows = read_manifest(manifest)?;
    let root = data_root
        .map(Path::to_path_buf)
        .or_else(|| manifest.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(ClipPool::from_rows(root, rows, sample_rate))
}

/// Replace manifest labels with those of a second manifest, matched by
/// clip path.
fn override_labels(
    rows: Vec<ManifestRow>,
    labels_manifest: &Path,
) -> Result<Vec<ManifestRow>, CliError> {
    let replacement = read_manifest(labels_manifest)?;
    let by_path: std::collections::BTreeMap<&str, &ManifestRow> = replacement
        .iter()
        .map(|r| (r.path.as_str(), r))
        .collect();
    rows.into_iter()
        .map(|row| match by_path.get(row.path.as_str()) {
            Some(replacement) => Ok(ManifestRow {
                labels: replacement.labels.clone(),
                ..row
            }),
            None => Err(CliError::Data(format!(
                "label manifest {} has no row for clip {}",
                labels_manifest.display(),
                row.path
            ))),
        })
        .collect()
}

pub(crate) fn train_to_dir(
    cfg: &ExperimentConfig,
    pool: &ClipPool,
    val: &PooledDataset,
    trainer: &TrainerConfig,
    out: &Path,
) -> Result<(), CliError> {
    mkdir(out)?;
    let outcome = train(pool, val, &cfg.augment, &cfg.feature, trainer)?;
    save_checkpoint(out.join("checkpoint.acdm"), &outcome.network, None)?;
    write_history_csv(out.join("history.csv"), &outcome.history)
        .map_err(|e| CliError::Data(format!("write history: {e}")))?;
    Ok(())
}

pub fn cmd_train(
    cfg: &ExperimentConfig,
    manifest: &Path,
    val_manifest: &Path,
    labels: Option<&Path>,
    data_root: Option<&Path>,
    out: &Path,
    dump: Option<usize>,
) -> Result<(), CliError> {
    let mut pool = load_pool(manifest, data_root, cfg.data.sample_rate)?;
    if let Some(labels_manifest) = labels {
        let rows = override_labels(pool.rows().to_vec(), labels_manifest)?;
        pool = ClipPool::from_rows(pool.root().to_path_buf(), rows, cfg.data.sample_rate);
    }
    let val_pool = load_pool(val_manifest, None, cfg.data.sample_rate)?;
    let val = pool_dataset(&val_pool, &cfg.feature)?;

    if let Some(n) = dump {
        let dump_dir = out.join("dump");
        mkdir(&dump_dir)?;
        for i in 0..n {
            let mut rng = seeded_rng(derive_seed(cfg.trainer.seed, 0x77, i as u64));
            let (clip, _) = generate_training_sequence(&pool, &cfg.augment, &mut rng)?;
            write_wav(dump_dir.join(format!("sequence_{i:03}.wav")), &clip)?;
        }
    }

    let mut trainer = cfg.trainer.clone();
    trainer.seed = cfg.seed;
    train_to_dir(cfg, &pool, &val, &trainer, out)?;
    println!("checkpoint and history written to {}", out.display());
    Ok(())
}

pub(crate) fn predictions_for(
    net: &Network<f32>,
    pooled: &PooledDataset,
) -> Result<TeacherPredictions, CliError> {
    Ok(predict(net, pooled)?)
}

pub fn cmd_predict(
    cfg: &ExperimentConfig,
    checkpoint: &Path,
    manifest: &Path,
    data_root: Option<&Path>,
    out: &Path,
) -> Result<(), CliError> {
    let (net, _) = load_checkpoint(checkpoint)?;
    let pool = load_pool(manifest, data_root, cfg.data.sample_rate)?;
    let pooled = pool_dataset(&pool, &cfg.feature)?;
    let preds = predictions_for(&net, &pooled)?;
    write_teacher_jsonl(out, &preds)?;
    println!("wrote {} predictions to {}", preds.len(), out.display());
    Ok(())
}

/// Apply one label-processing mode to a manifest. Returns the processed
/// rows and a mode-specific report.
pub(crate) fn apply_mode(
    mode: Mode,
    rows: &[ManifestRow],
    preds: &TeacherPredictions,
    cfg: &ExperimentConfig,
) -> Result<(Vec<ManifestRow>, serde_json::Value), CliError> {
    let enhancement_flags = |correct_fn, correct_fp, mask_fn, mask_fp| EnhancementConfig {
        threshold_t: cfg.enhancement.threshold_t,
        correct_fn,
        correct_fp,
        mask_fn,
        mask_fp,
    };
    let percentile = |direction, action| -> Result<(Vec<ManifestRow>, serde_json::Value), CliError> {
        let outcome = percentile_baseline(rows, preds, cfg.enhancement.percentile, direction, action)?;
        let report = serde_json::json!({
            "mode": mode.slug(),
            "eligible": outcome.eligible,
            "selected": outcome.selected,
            "note": outcome.note,
        });
        Ok((outcome.rows, report))
    };
    match mode {
        Mode::Raw => Ok((
            rows.to_vec(),
            serde_json::json!({"mode": "raw", "changed": 0}),
        )),
        Mode::CorrFn => enhanced(mode, rows, preds, enhancement_flags(true, false, false, false)),
        Mode::CorrFnFp => enhanced(mode, rows, preds, enhancement_flags(true, true, false, false)),
        Mode::CorrMaskFn => enhanced(mode, rows, preds, enhancement_flags(true, false, true, false)),
        Mode::CorrMaskFnFp => enhanced(mode, rows, preds, enhancement_flags(true, true, true, true)),
        Mode::PercentileMask => {
            percentile(PercentileDirection::FalseNegative, PercentileAction::Mask)
        }
        Mode::PercentileCorr => {
            percentile(PercentileDirection::FalseNegative, PercentileAction::Correct)
        }
        Mode::MeanthreshCorr => {
            let outcome = meanthresh_correct_baseline(rows, preds)?;
            let report = serde_json::json!({
                "mode": mode.slug(),
                "per_class_threshold": outcome.per_class_threshold,
                "skipped_classes": outcome.skipped_classes,
                "corrected": outcome.corrected,
            });
            Ok((outcome.rows, report))
        }
    }
}

fn enhanced(
    mode: Mode,
    rows: &[ManifestRow],
    preds: &TeacherPredictions,
    flags: EnhancementConfig,
) -> Result<(Vec<ManifestRow>, serde_json::Value), CliError> {
    let (out, report) = enhance_dataset(rows, preds, &flags)?;
    let report = serde_json::json!({
        "mode": mode.slug(),
        "per_class": report.per_class,
        "totals": report.totals,
    });
    Ok((out, report))
}

pub fn cmd_enhance(
    cfg: &ExperimentConfig,
    manifest: &Path,
    predictions: &Path,
    mode: Mode,
    out: &Path,
) -> Result<(), CliError> {
    let rows = read_manifest(manifest)?;
    let preds = read_teacher_jsonl(predictions)?;
    let (enhanced_rows, report) = apply_mode(mode, &rows, &preds, cfg)?;
    mkdir(out)?;
    write_manifest(out.join("enhanced.jsonl"), &enhanced_rows)?;
    write_json(&out.join("enhance_report.json"), &report)?;
    println!(
        "mode {}: enhanced manifest and report written to {}",
        mode.slug(),
        out.display()
    );
    Ok(())
}

pub(crate) fn eval_pooled(
    net: &Network<f32>,
    pooled: &PooledDataset,
    threshold: f64,
) -> Result<EvalResult, CliError> {
    let preds = predictions_for(net, pooled)?;
    let scores: Vec<Vec<f64>> = pooled
        .clip_ids
        .iter()
        .map(|id| preds.get(id).expect("prediction for every clip").clone())
        .collect();
    Ok(evaluate(&scores, &pooled.labels, threshold)?)
}

pub fn cmd_eval(
    cfg: &ExperimentConfig,
    checkpoint: &Path,
    manifest: &Path,
    data_root: Option<&Path>,
    out: &Path,
    svg: bool,
    pr_csv: bool,
) -> Result<(), CliError> {
    let (net, _) = load_checkpoint(checkpoint)?;
    let pool = load_pool(manifest, data_root, cfg.data.sample_rate)?;
    let pooled = pool_dataset(&pool, &cfg.feature)?;
    let result = eval_pooled(&net, &pooled, cfg.metric.accuracy_threshold)?;
    mkdir(out)?;
    write_json(&out.join("eval.json"), &result)?;
    if svg {
        let names: Vec<String> = default_families(cfg.data.classes)?
            .into_iter()
            .map(|f| f.name)
            .collect();
        std::fs::write(out.join("ap.svg"), render_ap_svg(&result, Some(&names)))
            .map_err(|e| CliError::Data(format!("write ap.svg: {e}")))?;
    }
    if pr_csv {
        let preds = predictions_for(&net, &pooled)?;
        let scores: Vec<Vec<f64>> = pooled
            .clip_ids
            .iter()
            .map(|id| preds.get(id).unwrap().clone())
            .collect();
        std::fs::write(out.join("pr.csv"), pr_curves_csv(&scores, &pooled.labels))
            .map_err(|e| CliError::Data(format!("write pr.csv: {e}")))?;
    }
    println!(
        "mAP {:.4}, mean accuracy {:.4} ({} masked entries excluded) -> {}",
        result.mean_ap,
        result.mean_accuracy,
        result.masked_entries,
        out.display()
    );
    Ok(())
}
