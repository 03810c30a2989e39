//! The end-to-end comparison experiment: synthesize data, inject label
//! noise, train a teacher on the noisy labels, predict over the training
//! set, enhance labels per mode, retrain students, and evaluate everything
//! on the clean test split.

use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use acd_core::augment::ClipPool;
use acd_core::labels::read_teacher_jsonl;
use acd_core::manifest::{read_manifest, write_manifest};
use acd_core::metrics::EvalResult;
use acd_core::model::{load_checkpoint, pool_dataset, PooledDataset};
use acd_core::rng::derive_seed;
use acd_core::synth::{inject_label_noise, synth_dataset, NoiseSpec};
use serde::{Deserialize, Serialize};

use super::{
    apply_mode, dataset_params, eval_pooled, mkdir, predictions_for, train_to_dir, write_json,
    STREAM_NOISE,
};
use crate::cache::{combine, hash_file, hash_json, run_stage, StageRecord};
use crate::config::{ExperimentConfig, Mode};
use crate::runlog::{unix_ms, write_run_manifest, RunManifest};
use crate::CliError;

/// Lazily built shared value (pooled datasets are reused across stages).
struct Lazy<T> {
    cell: Mutex<Option<Arc<T>>>,
}

impl<T> Lazy<T> {
    fn new() -> Self {
        Self {
            cell: Mutex::new(None),
        }
    }

    fn get_or_try(&self, build: impl FnOnce() -> Result<T, CliError>) -> Result<Arc<T>, CliError> {
        let mut guard = self.cell.lock().expect("lazy lock");
        if let Some(v) = guard.as_ref() {
            return Ok(Arc::clone(v));
        }
        let v = Arc::new(build()?);
        *guard = Some(Arc::clone(&v));
        Ok(v)
    }
}

/// One row of the final comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeRow {
    pub mode: String,
    pub label: String,
    pub accuracy: f64,
    pub map: f64,
    pub per_class_ap: Vec<Option<f64>>,
    pub skipped_classes: Vec<usize>,
    pub paths: ModePaths,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModePaths {
    pub enhanced_manifest: String,
    pub enhancement_report: String,
    pub checkpoint: String,
    pub history: String,
    pub eval: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub noise: NoiseSummary,
    pub modes: Vec<ModeRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseSummary {
    pub fn_rate: f64,
    pub fp_rate: f64,
}

/// Aligned text table in the layout of the comparison reports.
pub fn render_table(report: &ExperimentReport) -> String {
    let label_width = report
        .modes
        .iter()
        .map(|r| r.label.len())
        .max()
        .unwrap_or(6)
        .max("labels".len())
        + 2;
    let mut out = format!("{:<label_width$}Accuracy      mAP\n", "labels");
    for row in &report.modes {
        out.push_str(&format!(
            "{:<label_width$}  {:.4}   {:.4}\n",
            row.label, row.accuracy, row.map
        ));
    }
    out
}

pub fn cmd_experiment(
    cfg: &ExperimentConfig,
    out: Option<PathBuf>,
    external_teacher: Option<&Path>,
) -> Result<(), CliError> {
    let started = unix_ms();
    let out = out.unwrap_or_else(|| cfg.output_dir.clone());
    mkdir(&out)?;
    let tool = env!("CARGO_PKG_VERSION");
    let mut stages: Vec<StageRecord> = Vec::new();

    // ---- datasets: clean train/val/test splits.
    let data_root = out.join("datasets");
    let splits = [
        ("train", cfg.data.train_clips, 0u64),
        ("val", cfg.data.val_clips, 1),
        ("test", cfg.data.test_clips, 2),
    ];
    let mut split_keys = Vec::new();
    let mut manifests = Vec::new();
    for (purpose, n_clips, stream) in splits {
        let dir = data_root.join(purpose);
        let params = dataset_params(cfg, n_clips, stream)?;
        let key = combine(&[hash_json(&tool), hash_json(&purpose), hash_json(&params)]);
        let manifest = dir.join("manifest.jsonl");
        let record = run_stage(
            &format!("synth-{purpose}"),
            &dir,
            key,
            &[manifest.clone()],
            || {
                let rows = synth_dataset(&dir, &params)?;
                write_manifest(&manifest, &rows)?;
                Ok(())
            },
        )?;
        println!(
            "[{}] {}",
            record.name,
            if record.cached { "cached" } else { "done" }
        );
        stages.push(record);
        split_keys.push(key);
        manifests.push(manifest);
    }
    let (k_train, k_val, k_test) = (split_keys[0], split_keys[1], split_keys[2]);
    let (train_manifest, val_manifest, test_manifest) =
        (&manifests[0], &manifests[1], &manifests[2]);
    let train_dir = data_root.join("train");

    // ---- label noise on the training split.
    let noise = NoiseSpec {
        fn_rate: cfg.data.fn_rate,
        fp_rate: cfg.data.fp_rate,
        seed: derive_seed(cfg.seed, STREAM_NOISE, 0),
    };
    let noisy_manifest = train_dir.join("manifest.noisy.jsonl");
    let noisy_truth = train_dir.join("manifest.noisy.truth.jsonl");
    let k_noise = combine(&[k_train, hash_json(&noise)]);
    {
        let noisy_manifest = noisy_manifest.clone();
        let noisy_truth = noisy_truth.clone();
        let train_manifest = train_manifest.clone();
        let record = run_stage(
            "inject-noise",
            &train_dir,
            k_noise,
            &[noisy_manifest.clone(), noisy_truth.clone()],
            move || {
                let clean = read_manifest(&train_manifest)?;
                let noisy = inject_label_noise(&clean, &noise)?;
                write_manifest(&noisy_manifest, &noisy)?;
                write_manifest(&noisy_truth, &clean)?;
                Ok(())
            },
        )?;
        println!(
            "[{}] {}",
            record.name,
            if record.cached { "cached" } else { "done" }
        );
        stages.push(record);
    }

    // ---- shared pooled datasets (built on demand, reused by stages).
    let rate = cfg.data.sample_rate;
    let val_pooled: Lazy<PooledDataset> = Lazy::new();
    let test_pooled: Lazy<PooledDataset> = Lazy::new();
    let get_val = |cfg: &ExperimentConfig| {
        val_pooled.get_or_try(|| {
            let pool = ClipPool::load(val_manifest, rate)?;
            Ok(pool_dataset(&pool, &cfg.feature)?)
        })
    };
    let get_test = |cfg: &ExperimentConfig| {
        test_pooled.get_or_try(|| {
            let pool = ClipPool::load(test_manifest, rate)?;
            Ok(pool_dataset(&pool, &cfg.feature)?)
        })
    };

    let mut trainer = cfg.trainer.clone();
    trainer.seed = cfg.seed;
    let mut teacher_trainer = trainer.clone();
    if let Some(epochs) = cfg.teacher_max_epochs {
        teacher_trainer.max_epochs = epochs;
    }
    let k_trainer = combine(&[
        hash_json(&trainer),
        hash_json(&cfg.augment),
        hash_json(&cfg.feature),
    ]);

    // ---- teacher: trained on the noisy labels, unless external (e.g.
    // zero-shot) predictions were supplied.
    let teacher_dir = out.join("teacher");
    let (predictions_path, k_pred) = match external_teacher {
        Some(external) => {
            // Normalize through the reader (raw score rows become softmax
            // probabilities) and keep a snapshot next to the run.
            mkdir(&teacher_dir)?;
            let snapshot = teacher_dir.join("predictions.jsonl");
            let preds = read_teacher_jsonl(external)?;
            acd_core::labels::write_teacher_jsonl(&snapshot, &preds)?;
            let key = combine(&[hash_file(&snapshot)?, hash_json(&"external-teacher")]);
            println!("[teacher] external predictions from {}", external.display());
            (snapshot, key)
        }
        None => {
            // The teacher depends on its own budget, not the students'.
            let k_teacher = combine(&[
                k_noise,
                k_val,
                hash_json(&teacher_trainer),
                hash_json(&cfg.augment),
                hash_json(&cfg.feature),
                hash_file(&noisy_manifest)?,
            ]);
            let teacher_ckpt = teacher_dir.join("checkpoint.acdm");
            let record = run_stage(
                "teacher-train",
                &teacher_dir,
                k_teacher,
                &[teacher_ckpt.clone(), teacher_dir.join("history.csv")],
                || {
                    let rows = read_manifest(&noisy_manifest)?;
                    let pool = ClipPool::from_rows(train_dir.clone(), rows, rate);
                    let val = get_val(cfg)?;
                    train_to_dir(cfg, &pool, &val, &teacher_trainer, &teacher_dir)
                },
            )?;
            println!(
                "[{}] {}",
                record.name,
                if record.cached { "cached" } else { "done" }
            );
            stages.push(record);

            let predictions_path = teacher_dir.join("predictions.jsonl");
            let k_pred = combine(&[k_teacher, hash_json(&"predict")]);
            {
                let predictions_path = predictions_path.clone();
                let record = run_stage(
                    "teacher-predict",
                    &teacher_dir,
                    k_pred,
                    &[predictions_path.clone()],
                    || {
                        let (net, _) = load_checkpoint(&teacher_ckpt)?;
                        let rows = read_manifest(&noisy_manifest)?;
                        let pool = ClipPool::from_rows(train_dir.clone(), rows, rate);
                        let pooled = pool_dataset(&pool, &cfg.feature)?;
                        let preds = predictions_for(&net, &pooled)?;
                        acd_core::labels::write_teacher_jsonl(&predictions_path, &preds)?;
                        Ok(())
                    },
                )?;
                println!(
                    "[{}] {}",
                    record.name,
                    if record.cached { "cached" } else { "done" }
                );
                stages.push(record);
            }
            (predictions_path, k_pred)
        }
    };

    // ---- per-mode: enhance, retrain, evaluate (modes run in parallel).
    let modes_dir = out.join("modes");
    let mode_results: Vec<Result<(Vec<StageRecord>, ModeRow), CliError>> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = cfg
                .modes
                .iter()
                .map(|&mode| {
                    let modes_dir = &modes_dir;
                    let out = &out;
                    let noisy_manifest = &noisy_manifest;
                    let predictions_path = &predictions_path;
                    let train_dir = &train_dir;
                    let trainer = &trainer;
                    let get_val = &get_val;
                    let get_test = &get_test;
                    scope.spawn(move || {
                        run_mode(
                            cfg,
                            mode,
                            modes_dir,
                            out,
                            noisy_manifest,
                            predictions_path,
                            train_dir,
                            trainer,
                            k_pred,
                            k_trainer,
                            k_val,
                            k_test,
                            get_val,
                            get_test,
                        )
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("mode thread panicked"))
                .collect()
        });

    let mut rows = Vec::new();
    for result in mode_results {
        let (mode_stages, row) = result?;
        for record in &mode_stages {
            println!(
                "[{}] {}",
                record.name,
                if record.cached { "cached" } else { "done" }
            );
        }
        stages.extend(mode_stages);
        rows.push(row);
    }

    // ---- final report.
    let report = ExperimentReport {
        seed: cfg.seed,
        noise: NoiseSummary {
            fn_rate: cfg.data.fn_rate,
            fp_rate: cfg.data.fp_rate,
        },
        modes: rows,
    };
    write_json(&out.join("report.json"), &report)?;
    let table = render_table(&report);
    std::fs::write(out.join("report.txt"), &table)
        .map_err(|e| CliError::Data(format!("write report.txt: {e}")))?;
    print!("{table}");

    let run = RunManifest {
        tool_version: tool,
        command: "experiment".into(),
        seed: cfg.seed,
        started_unix_ms: started,
        finished_unix_ms: unix_ms(),
        config: serde_json::to_value(cfg).expect("config serializes"),
        stages,
    };
    write_run_manifest(&out.join("run.json"), &run)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_mode(
    cfg: &ExperimentConfig,
    mode: Mode,
    modes_dir: &Path,
    out_root: &Path,
    noisy_manifest: &Path,
    predictions_path: &Path,
    train_dir: &Path,
    trainer: &acd_core::model::TrainerConfig,
    k_pred: u64,
    k_trainer: u64,
    k_val: u64,
    k_test: u64,
    get_val: &dyn Fn(&ExperimentConfig) -> Result<Arc<PooledDataset>, CliError>,
    get_test: &dyn Fn(&ExperimentConfig) -> Result<Arc<PooledDataset>, CliError>,
) -> Result<(Vec<StageRecord>, ModeRow), CliError> {
    let mut stages = Vec::new();
    let mode_dir = modes_dir.join(mode.slug());
    let enhanced_manifest = mode_dir.join("enhanced.jsonl");
    let report_path = mode_dir.join("enhance_report.json");
    let rate = cfg.data.sample_rate;

    // Enhance (or pass through) the noisy labels.
    let k_enh = combine(&[
        k_pred,
        hash_json(&cfg.enhancement),
        hash_json(&mode.slug()),
        hash_file(predictions_path)?,
    ]);
    {
        let enhanced_manifest = enhanced_manifest.clone();
        let report_path = report_path.clone();
        stages.push(run_stage(
            &format!("{}-enhance", mode.slug()),
            &mode_dir,
            k_enh,
            &[enhanced_manifest.clone(), report_path.clone()],
            || {
                let rows = read_manifest(noisy_manifest)?;
                let preds = read_teacher_jsonl(predictions_path)?;
                let (enhanced, report) = apply_mode(mode, &rows, &preds, cfg)?;
                write_manifest(&enhanced_manifest, &enhanced)?;
                write_json(&report_path, &report)?;
                Ok(())
            },
        )?);
    }

    // Retrain the student from scratch on the processed labels.
    let k_student = combine(&[k_enh, k_trainer, k_val]);
    let student_ckpt = mode_dir.join("checkpoint.acdm");
    {
        stages.push(run_stage(
            &format!("{}-train", mode.slug()),
            &mode_dir,
            k_student,
            &[student_ckpt.clone(), mode_dir.join("history.csv")],
            || {
                // Enhanced rows keep the original clip paths, which resolve
                // against the training dataset directory.
                let rows = read_manifest(&enhanced_manifest)?;
                let pool = ClipPool::from_rows(train_dir.to_path_buf(), rows, rate);
                let val = get_val(cfg)?;
                train_to_dir(cfg, &pool, &val, trainer, &mode_dir)
            },
        )?);
    }

    // Evaluate on the clean test split.
    let eval_path = mode_dir.join("eval.json");
    let k_eval = combine(&[k_student, k_test, hash_json(&cfg.metric)]);
    {
        let eval_path = eval_path.clone();
        stages.push(run_stage(
            &format!("{}-eval", mode.slug()),
            &mode_dir,
            k_eval,
            &[eval_path.clone()],
            || {
                let (net, _) = load_checkpoint(&student_ckpt)?;
                let test = get_test(cfg)?;
                let result = eval_pooled(&net, &test, cfg.metric.accuracy_threshold)?;
                write_json(&eval_path, &result)
            },
        )?);
    }

    let eval_text = std::fs::read_to_string(&eval_path)
        .map_err(|e| CliError::Data(format!("read {}: {e}", eval_path.display())))?;
    let eval: EvalResult = serde_json::from_str(&eval_text)
        .map_err(|e| CliError::Data(format!("parse {}: {e}", eval_path.display())))?;

    let rel = |p: &Path| {
        p.strip_prefix(out_root)
            .unwrap_or(p)
            .display()
            .to_string()
    };
    let row = ModeRow {
        mode: mode.slug().to_string(),
        label: mode.display_row().to_string(),
        accuracy: eval.mean_accuracy,
        map: eval.mean_ap,
        per_class_ap: eval.per_class_ap.clone(),
        skipped_classes: eval.skipped_classes.clone(),
        paths: ModePaths {
            enhanced_manifest: rel(&enhanced_manifest),
            enhancement_report: rel(&report_path),
            checkpoint: rel(&student_ckpt),
            history: rel(&mode_dir.join("history.csv")),
            eval: rel(&eval_path),
        },
    };
    Ok((stages, row))
}

/// Re-render the comparison table of a finished run.
pub fn cmd_report(run_dir: &Path) -> Result<(), CliError> {
    let report_path = run_dir.join("report.json");
    let text = std::fs::read_to_string(&report_path)
        .map_err(|e| CliError::Data(format!("read {}: {e}", report_path.display())))?;
    let report: ExperimentReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("parse {}: {e}", report_path.display())))?;
    print!("{}", render_table(&report));
    Ok(())
}
