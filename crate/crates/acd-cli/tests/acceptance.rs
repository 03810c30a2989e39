//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured values. Run with `cargo test -p acd-cli --test acceptance --
//! --nocapture` to see the lines; the comparison experiments (criteria 7/8)
//! cache their stages under the target tmpdir, so re-runs are fast.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use acd_core::audio::{featurize, AudioClip, StftConfig};
use acd_core::augment::{
    generate_training_sequence_traced, AugmentConfig, ClipPool, MicAugmentConfig, MixupConfig,
    MixupMode, SourceAugmentConfig,
};
use acd_core::labels::{
    enhance, join, normalize_teacher_scores, EnhancementConfig, LabelState, TriStateLabelVector,
};
use acd_core::manifest::ManifestRow;
use acd_core::metrics::average_precision;
use acd_core::model::{masked_bce, LabelMatrix, Matrix, ModelConfig, Network};
use acd_core::rng::{derive_seed, seeded_rng};
use rand::Rng as _;

// ---------------------------------------------------------------------------
// Criterion 1: feature-shape reproduction.
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_feature_shape() {
    let mut rng = seeded_rng(1);
    let samples: Vec<f32> = (0..160_000).map(|_| rng.random_range(-0.5..0.5)).collect();
    let clip = AudioClip::new(samples, 16_000);
    let start = Instant::now();
    let feature = featurize(&clip, &StftConfig::default()).unwrap();
    let elapsed = start.elapsed();
    assert_eq!(
        (feature.frames, feature.bins, feature.data.len()),
        (624, 257, 624 * 257 * 2),
        "10 s at 16 kHz must produce exactly 624x257x2"
    );
    assert!(
        elapsed.as_secs_f64() < 1.0,
        "featurization took {elapsed:?}, budget is 1 s"
    );
    println!(
        "criterion 1: PASS - 10 s @ 16 kHz -> {}x{}x2 in {elapsed:?}",
        feature.frames, feature.bins
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: gradient verification against central finite differences.
// ---------------------------------------------------------------------------

struct GradInstance {
    net: Network<f64>,
    features: Matrix<f64>,
    labels: LabelMatrix<f64>,
}

fn random_grad_instance(seed: u64, mask_all: bool) -> GradInstance {
    let mut rng = seeded_rng(seed);
    let input_dim = rng.random_range(3..8);
    let hidden: Vec<usize> = (0..rng.random_range(1..3))
        .map(|_| rng.random_range(2..6))
        .collect();
    let classes = rng.random_range(2..5);
    let batch = rng.random_range(1..5);
    let net = Network::<f64>::init(
        &ModelConfig::new(input_dim, &hidden, classes),
        derive_seed(seed, 9, 0),
    );
    let features = Matrix::from_rows(
        (0..batch)
            .map(|_| (0..input_dim).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect(),
    );
    let labels = LabelMatrix::from_rows(
        (0..batch)
            .map(|_| {
                (0..classes)
                    .map(|_| {
                        if mask_all || rng.random_bool(0.3) {
                            None
                        } else if rng.random_bool(0.5) {
                            Some(1.0)
                        } else {
                            Some(0.0)
                        }
                    })
                    .collect()
            })
            .collect(),
    );
    GradInstance {
        net,
        features,
        labels,
    }
}

fn instance_loss(net: &Network<f64>, inst: &GradInstance) -> f64 {
    let probs = net.forward(&inst.features).unwrap();
    masked_bce(&probs, &inst.labels).unwrap().0
}

#[test]
fn criterion_02_gradient_verification() {
    let start = Instant::now();
    let h = 1e-5;
    let mut checked_params = 0usize;
    let mut max_rel = 0.0f64;
    for trial in 0..110 {
        let inst = random_grad_instance(trial, false);
        let cache = inst.net.forward_cached(&inst.features).unwrap();
        let analytic = inst.net.backward(&cache, &inst.labels).unwrap().flatten();
        let flat = inst.net.flatten();
        let mut probe = inst.net.clone();
        for i in 0..flat.len() {
            let mut plus = flat.clone();
            plus[i] += h;
            probe.unflatten_from(&plus);
            let up = instance_loss(&probe, &inst);
            let mut minus = flat.clone();
            minus[i] -= h;
            probe.unflatten_from(&minus);
            let down = instance_loss(&probe, &inst);
            let numeric = (up - down) / (2.0 * h);
            let rel = (analytic[i] - numeric).abs()
                / analytic[i].abs().max(numeric.abs()).max(1e-8);
            assert!(
                rel < 1e-4,
                "trial {trial} param {i}: analytic {} vs numeric {numeric} (rel {rel:.3e})",
                analytic[i]
            );
            max_rel = max_rel.max(rel);
            checked_params += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "gradient check took {elapsed:?}, budget is 1 min"
    );
    println!(
        "criterion 2: PASS - 110 instances, {checked_params} parameters, max rel err {max_rel:.2e} in {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: masking semantics (exact-zero sensitivity).
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_masking_semantics() {
    let mut tested = 0usize;
    let mut trial = 0u64;
    while tested < 30 {
        trial += 1;
        let inst = random_grad_instance(700 + trial, false);
        let masked_pos: Vec<(usize, usize)> = (0..inst.labels.rows)
            .flat_map(|r| (0..inst.labels.cols).map(move |c| (r, c)))
            .filter(|&(r, c)| inst.labels.at(r, c).is_none())
            .collect();
        if masked_pos.is_empty() {
            continue;
        }
        let cache = inst.net.forward_cached(&inst.features).unwrap();
        let (loss, weights) = masked_bce(&cache.probs, &inst.labels).unwrap();
        let grads = inst.net.backward(&cache, &inst.labels).unwrap().flatten();
        for &(r, c) in &masked_pos {
            assert_eq!(weights.at(r, c), 0.0, "masked entries carry zero weight");
            let mut perturbed = cache.clone();
            *perturbed.probs.at_mut(r, c) = 0.987_654;
            let (loss_p, _) = masked_bce(&perturbed.probs, &inst.labels).unwrap();
            let grads_p = inst.net.backward(&perturbed, &inst.labels).unwrap().flatten();
            assert_eq!(loss, loss_p, "loss must not depend on masked output");
            assert_eq!(grads, grads_p, "gradients must not depend on masked output");
        }
        tested += 1;
    }
    println!("criterion 3: PASS - {tested} batches, exact-zero sensitivity at every masked entry");
}

// ---------------------------------------------------------------------------
// Criterion 4: label-enhancement truth table at T = 0.05.
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_enhancement_truth_table() {
    let t = 0.05;
    let mut combinations = 0usize;
    for flags in 0..16u8 {
        let cfg = EnhancementConfig {
            threshold_t: t,
            correct_fn: flags & 1 != 0,
            correct_fp: flags & 2 != 0,
            mask_fn: flags & 4 != 0,
            mask_fp: flags & 8 != 0,
        };
        for y in [LabelState::Absent, LabelState::Present] {
            for step in 0..=100 {
                let p = step as f64 / 100.0;
                let labels = TriStateLabelVector::new(vec![y]);
                let (out, report) = enhance(&labels, &[p], &cfg).unwrap();

                // Literal rule guards, restated independently.
                let expected = match y {
                    LabelState::Absent if cfg.correct_fn && p > 1.0 - t => LabelState::Present,
                    LabelState::Absent if cfg.mask_fn && p > 0.5 && p < 1.0 - t => {
                        LabelState::Masked
                    }
                    LabelState::Present if cfg.correct_fp && p < t => LabelState::Absent,
                    LabelState::Present if cfg.mask_fp && p > t && p < 0.5 => LabelState::Masked,
                    other => other,
                };
                assert_eq!(
                    out.get(0),
                    expected,
                    "flags {flags:04b}, y {y:?}, p {p}"
                );

                // Mutual exclusivity: the guards partition the axis, so at
                // most one transition is ever tallied.
                assert!(report.changed() <= 1, "two rules fired at p {p}");
                // With all flags on, verify exclusivity directly from the
                // guard predicates.
                if flags == 0b1111 {
                    let fired = [
                        y == LabelState::Absent && p > 1.0 - t,
                        y == LabelState::Absent && p > 0.5 && p < 1.0 - t,
                        y == LabelState::Present && p < t,
                        y == LabelState::Present && p > t && p < 0.5,
                    ]
                    .iter()
                    .filter(|&&b| b)
                    .count();
                    assert!(fired <= 1, "guards overlap at y {y:?}, p {p}");
                }
                combinations += 1;
            }
        }
    }
    println!(
        "criterion 4: PASS - {combinations} (flags, label, prediction) combinations match the rule guards"
    );
}

// ---------------------------------------------------------------------------
// Criterion 5: AP equals a brute-force PR-sweep oracle exactly.
// ---------------------------------------------------------------------------

fn ap_oracle(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return None;
    }
    let mut cuts: Vec<f64> = scores.to_vec();
    cuts.sort_by(|a, b| b.partial_cmp(a).unwrap());
    cuts.dedup();
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for &cut in &cuts {
        let tp = scores
            .iter()
            .zip(labels)
            .filter(|(&s, &l)| s >= cut && l)
            .count();
        let predicted = scores.iter().filter(|&&s| s >= cut).count();
        ap += (tp as f64 / positives as f64 - prev_recall) * (tp as f64 / predicted as f64);
        prev_recall = tp as f64 / positives as f64;
    }
    Some(ap)
}

#[test]
fn criterion_05_ap_oracle_equivalence() {
    let mut rng = seeded_rng(55);
    let mut compared = 0usize;
    for _ in 0..1100 {
        let n = rng.random_range(1..=1000);
        let quantize = rng.random_bool(0.5);
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                let s: f64 = rng.random_range(0.0..1.0);
                if quantize {
                    (s * 16.0).round() / 16.0
                } else {
                    s
                }
            })
            .collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.35)).collect();
        let implementation = average_precision(&scores, &labels);
        assert_eq!(implementation, ap_oracle(&scores, &labels), "n = {n}");

        // Invariance under strictly monotone transforms.
        let affine: Vec<f64> = scores.iter().map(|s| 3.0 * s - 11.0).collect();
        let logistic: Vec<f64> = scores.iter().map(|s| 1.0 / (1.0 + (-4.0 * s).exp())).collect();
        assert_eq!(average_precision(&affine, &labels), implementation);
        assert_eq!(average_precision(&logistic, &labels), implementation);
        compared += 1;
    }
    println!(
        "criterion 5: PASS - {compared} random instances equal the brute-force oracle exactly, monotone-invariant"
    );
}

// ---------------------------------------------------------------------------
// Criterion 6: mixup label-join soundness with provenance tracking.
// ---------------------------------------------------------------------------

fn build_acceptance_pool(dir: &Path) -> ClipPool {
    use acd_core::synth::{default_families, synth_clip};
    let families = default_families(4).unwrap();
    let mut rows = Vec::new();
    let mut rng = seeded_rng(66);
    for i in 0..16 {
        let family = i % 4;
        let clip = synth_clip(&families[family], 1.5, 8_000, i as u64);
        let rel = format!("clip{i:02}.wav");
        acd_core::audio::write_wav(dir.join(&rel), &clip).unwrap();
        // Random extra labels so joins are non-trivial.
        let mut present = vec![false; 4];
        present[family] = true;
        if rng.random_bool(0.3) {
            present[rng.random_range(0..4)] = true;
        }
        rows.push(ManifestRow {
            path: rel,
            labels: TriStateLabelVector::from_binary(&present),
            duration_s: 1.5,
        });
    }
    ClipPool::from_rows(dir.to_path_buf(), rows, 8_000)
}

#[test]
fn criterion_06_label_join_soundness() {
    let dir = tempfile::tempdir().unwrap();
    let pool = build_acceptance_pool(dir.path());
    let join_cfg = AugmentConfig {
        mixup: MixupConfig {
            i_max: 3,
            sigma_s_db: 2.0,
            sequence_length_s: 1.0,
            min_crop_s: 0.5,
            mode: MixupMode::LabelJoin,
        },
        source: SourceAugmentConfig::disabled(),
        mic: MicAugmentConfig::disabled(),
    };
    for seq in 0..1000u64 {
        let mut rng = seeded_rng(derive_seed(606, 0, seq));
        let (_, labels, trace) =
            generate_training_sequence_traced(&pool, &join_cfg, &mut rng).unwrap();
        let mut expected = TriStateLabelVector::all_absent(4);
        for &row in &trace.contributing_rows {
            expected = join(&expected, &pool.rows()[row].labels).unwrap();
        }
        for c in 0..4 {
            let want = match expected.get(c) {
                LabelState::Present => Some(1.0),
                _ => Some(0.0),
            };
            assert_eq!(labels[c], want, "sequence {seq} class {c}");
        }
    }

    let mut weighted_cfg = join_cfg.clone();
    weighted_cfg.mixup.mode = MixupMode::Weighted;
    weighted_cfg.mixup.i_max = 2;
    for seq in 0..1000u64 {
        let mut rng = seeded_rng(derive_seed(607, 0, seq));
        let (_, labels, trace) =
            generate_training_sequence_traced(&pool, &weighted_cfg, &mut rng).unwrap();
        let alpha = trace.alpha.unwrap();
        for c in 0..4 {
            let y1 = trace.source_labels[0].get(c).target().unwrap();
            let y2 = trace.source_labels[1].get(c).target().unwrap();
            let want = alpha * y1 + (1.0 - alpha) * y2;
            let got = labels[c].unwrap();
            assert!(
                (got - want).abs() < 1e-6,
                "weighted sequence {seq} class {c}: {got} vs {want}"
            );
        }
    }
    println!(
        "criterion 6: PASS - 1000 joined + 1000 weighted sequences match their provenance labels"
    );
}

// ---------------------------------------------------------------------------
// Criteria 7 and 8: the scaled-down noisy-label experiment.
// ---------------------------------------------------------------------------

fn acd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_acd"))
}

fn experiment_out_root() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-experiments")
}

#[derive(Debug, Clone, Copy)]
struct SeedResult {
    raw: f64,
    corr_mask_fn: f64,
    percentile_mask: f64,
    percentile_corr: f64,
}

fn run_experiment(out: &Path, seed: u64, sets: &[String]) -> serde_json::Value {
    let mut cmd = acd();
    cmd.arg("experiment")
        .arg("--seed")
        .arg(seed.to_string())
        .arg("--out")
        .arg(out);
    for s in sets {
        cmd.arg("--set").arg(s);
    }
    let output = cmd.output().expect("spawn acd experiment");
    assert!(
        output.status.success(),
        "experiment seed {seed} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn mode_map(report: &serde_json::Value, mode: &str) -> f64 {
    report["modes"]
        .as_array()
        .unwrap()
        .iter()
        .find(|m| m["mode"] == mode)
        .unwrap_or_else(|| panic!("mode {mode} missing from report"))["map"]
        .as_f64()
        .unwrap()
}

#[test]
fn criterion_07_08_noisy_label_experiment() {
    let started = Instant::now();
    let root = experiment_out_root();
    std::fs::create_dir_all(&root).unwrap();
    let seeds = [101u64, 202, 303];

    // Default synthetic preset: 8 classes, 4000 train / 1000 test clips,
    // fn 0.3 / fp 0.02; modes cover the comparison and both percentile
    // baselines.
    let mut noisy = Vec::new();
    for &seed in &seeds {
        let out = root.join(format!("noisy-{seed}"));
        let report = run_experiment(&out, seed, &[]);
        let result = SeedResult {
            raw: mode_map(&report, "raw"),
            corr_mask_fn: mode_map(&report, "corr+mask-fn"),
            percentile_mask: mode_map(&report, "percentile-mask"),
            percentile_corr: mode_map(&report, "percentile-corr"),
        };
        println!(
            "  seed {seed}: raw {:.4}, corr+mask-fn {:.4}, percentile-mask {:.4}, percentile-corr {:.4}",
            result.raw, result.corr_mask_fn, result.percentile_mask, result.percentile_corr
        );
        noisy.push(result);
    }

    // No-noise control with the two headline modes.
    let control_sets = vec![
        "data.fn_rate=0.0".to_string(),
        "data.fp_rate=0.0".to_string(),
        r#"modes=["raw","corr+mask-fn"]"#.to_string(),
    ];
    let mut control_gaps = Vec::new();
    for &seed in &seeds {
        let out = root.join(format!("control-{seed}"));
        let report = run_experiment(&out, seed, &control_sets);
        let gap = mode_map(&report, "corr+mask-fn") - mode_map(&report, "raw");
        println!("  control seed {seed}: delta mAP {gap:+.4}");
        control_gaps.push(gap);
    }

    // Criterion 7: enhancement beats raw noisy labels by >= 0.02 in at
    // least 2 of 3 seeds and never degrades by more than 0.01; the control
    // stays within noise.
    let wins = noisy
        .iter()
        .filter(|r| r.corr_mask_fn - r.raw >= 0.02)
        .count();
    let worst = noisy
        .iter()
        .map(|r| r.corr_mask_fn - r.raw)
        .fold(f64::INFINITY, f64::min);
    assert!(
        wins >= 2,
        "corr+mask-fn beat raw by >= 0.02 in only {wins}/3 seeds"
    );
    assert!(
        worst >= -0.01,
        "corr+mask-fn degraded mAP by {:.4} (limit 0.01)",
        -worst
    );
    for (seed, gap) in seeds.iter().zip(&control_gaps) {
        assert!(
            gap.abs() < 0.02,
            "no-noise control seed {seed}: |delta mAP| = {:.4} >= 0.02",
            gap.abs()
        );
    }
    println!(
        "criterion 7: PASS - corr+mask-fn beat raw by >= 0.02 in {wins}/3 seeds (worst delta {worst:+.4}); control gaps {:?}",
        control_gaps
            .iter()
            .map(|g| format!("{g:+.4}"))
            .collect::<Vec<_>>()
    );

    // Criterion 8: percentile correction must not outperform percentile
    // masking on average (small tolerance for seed noise; the direction
    // itself is expected but not asserted per-seed).
    let mean_mask: f64 =
        noisy.iter().map(|r| r.percentile_mask).sum::<f64>() / noisy.len() as f64;
    let mean_corr: f64 =
        noisy.iter().map(|r| r.percentile_corr).sum::<f64>() / noisy.len() as f64;
    assert!(
        mean_corr <= mean_mask + 0.005,
        "percentile-corr ({mean_corr:.4}) outperformed percentile-mask ({mean_mask:.4})"
    );
    let direction = if mean_corr < mean_mask {
        "matches the expected ordering"
    } else {
        "within tolerance (expected ordering not observed this run)"
    };
    println!(
        "criterion 8: PASS - mean percentile-mask {mean_mask:.4} vs percentile-corr {mean_corr:.4}; {direction}"
    );
    println!(
        "  (criteria 7/8 wall time {:.1} min)",
        started.elapsed().as_secs_f64() / 60.0
    );
}

// ---------------------------------------------------------------------------
// Criterion 9: byte-identical primary outputs on re-runs.
// ---------------------------------------------------------------------------

fn tiny_sets() -> Vec<String> {
    [
        "data.classes=3",
        "data.train_clips=16",
        "data.val_clips=8",
        "data.test_clips=8",
        "data.sample_rate=8000",
        "data.duration_s=[1.0,2.0]",
        "data.polyphony_max=2",
        "augment.mixup.sequence_length_s=1.0",
        "augment.mixup.min_crop_s=0.5",
        "trainer.epoch_sequences=16",
        "trainer.batch_size=8",
        "trainer.max_epochs=2",
        "trainer.hidden=[8]",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[test]
fn criterion_09_determinism() {
    let root = tempfile::tempdir().unwrap();
    let sets = tiny_sets();
    let run_all = |tag: &str| -> Vec<(String, Vec<u8>)> {
        let base = root.path().join(tag);
        let data = base.join("data");
        let mut cmd = acd();
        cmd.arg("synth").arg("--out").arg(&data).arg("--seed").arg("40");
        for s in &sets {
            cmd.arg("--set").arg(s);
        }
        assert!(cmd.output().unwrap().status.success());

        let model = base.join("model");
        let mut cmd = acd();
        cmd.arg("train")
            .arg("--manifest")
            .arg(data.join("manifest.jsonl"))
            .arg("--val")
            .arg(data.join("manifest.jsonl"))
            .arg("--out")
            .arg(&model)
            .arg("--seed")
            .arg("40");
        for s in &sets {
            cmd.arg("--set").arg(s);
        }
        assert!(cmd.output().unwrap().status.success());

        let preds = base.join("preds.jsonl");
        let mut cmd = acd();
        cmd.arg("predict")
            .arg("--checkpoint")
            .arg(model.join("checkpoint.acdm"))
            .arg("--manifest")
            .arg(data.join("manifest.jsonl"))
            .arg("--out")
            .arg(&preds);
        for s in &sets {
            cmd.arg("--set").arg(s);
        }
        assert!(cmd.output().unwrap().status.success());

        let eval_dir = base.join("eval");
        let mut cmd = acd();
        cmd.arg("eval")
            .arg("--checkpoint")
            .arg(model.join("checkpoint.acdm"))
            .arg("--manifest")
            .arg(data.join("manifest.jsonl"))
            .arg("--out")
            .arg(&eval_dir);
        for s in &sets {
            cmd.arg("--set").arg(s);
        }
        assert!(cmd.output().unwrap().status.success());

        [
            ("manifest", data.join("manifest.jsonl")),
            ("truth", data.join("manifest.truth.jsonl")),
            ("checkpoint", model.join("checkpoint.acdm")),
            ("history", model.join("history.csv")),
            ("predictions", preds),
            ("eval", eval_dir.join("eval.json")),
        ]
        .into_iter()
        .map(|(name, path)| (name.to_string(), std::fs::read(path).unwrap()))
        .collect()
    };

    let first = run_all("a");
    let second = run_all("b");
    for ((name, a), (_, b)) in first.iter().zip(&second) {
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    println!(
        "criterion 9: PASS - manifests, checkpoint, history, predictions and metrics are byte-identical across re-runs"
    );
}

// ---------------------------------------------------------------------------
// Criterion 10: teacher-score normalization.
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_teacher_score_normalization() {
    let mut rng = seeded_rng(10);
    for _ in 0..500 {
        let c = rng.random_range(2..12);
        let scores: Vec<f64> = (0..c).map(|_| rng.random_range(-8.0..8.0)).collect();
        let (probs, _) = normalize_teacher_scores(&scores, 0.2).unwrap();
        let sum: f64 = probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9, "softmax sum {sum}");

        let shifted: Vec<f64> = scores.iter().map(|s| s + 17.25).collect();
        let (probs_shifted, _) = normalize_teacher_scores(&shifted, 0.2).unwrap();
        for (a, b) in probs.iter().zip(&probs_shifted) {
            assert!((a - b).abs() < 1e-12, "shift changed softmax: {a} vs {b}");
        }
    }
    // Uniform scores over C >= 5 classes with the 0.2 presence threshold:
    // every probability is 1/C <= 0.2, and the comparison is strict.
    for c in 5..=10 {
        let (probs, labels) = normalize_teacher_scores(&vec![1.7; c], 0.2).unwrap();
        assert!(labels.iter().all(|&l| !l), "C = {c} produced a present label");
        assert!((probs[0] - 1.0 / c as f64).abs() < 1e-12);
    }
    println!(
        "criterion 10: PASS - softmax sums to 1 within 1e-9, shift-invariant, uniform scores over C >= 5 stay absent at 0.2"
    );
}
