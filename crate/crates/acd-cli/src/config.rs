//! Experiment configuration: one JSON document covering data synthesis,
//! features, augmentation, enhancement, training and metrics. Every field
//! can be overridden on the command line with `--set key.path=value`.

use std::path::{Path, PathBuf};

use acd_core::augment::AugmentConfig;
use acd_core::audio::StftConfig;
use acd_core::model::TrainerConfig;
use acd_core::synth::default_families;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Dataset synthesis and label-noise parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub classes: usize,
    pub train_clips: usize,
    pub val_clips: usize,
    pub test_clips: usize,
    pub sample_rate: u32,
    pub polyphony_max: usize,
    pub duration_s: (f64, f64),
    /// Per-component level range of mixed clips in dB.
    pub component_gain_db: (f64, f64),
    /// Background-noise SNR range in dB.
    pub background_snr_db: (f64, f64),
    /// Probability a true present label is recorded absent.
    pub fn_rate: f64,
    /// Probability a true absent label is recorded present.
    pub fp_rate: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            classes: 8,
            train_clips: 4000,
            val_clips: 500,
            test_clips: 1000,
            sample_rate: 16_000,
            polyphony_max: 3,
            duration_s: (5.0, 12.0),
            component_gain_db: (-15.0, 0.0),
            background_snr_db: (3.0, 15.0),
            fn_rate: 0.3,
            fp_rate: 0.02,
        }
    }
}

/// Label-enhancement parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnhancementSection {
    /// Confidence margin T of the correction/masking rules.
    pub threshold_t: f64,
    /// Fraction (percent) used by the percentile baselines.
    pub percentile: f64,
    /// Presence threshold applied to softmax-normalized zero-shot teacher
    /// scores.
    pub teacher_presence_threshold: f64,
}

impl Default for EnhancementSection {
    fn default() -> Self {
        Self {
            threshold_t: 0.05,
            percentile: 5.0,
            teacher_presence_threshold: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricSection {
    /// Decision threshold of the accuracy metric.
    pub accuracy_threshold: f64,
}

impl Default for MetricSection {
    fn default() -> Self {
        Self {
            accuracy_threshold: 0.5,
        }
    }
}

/// Label-processing modes of the comparison experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Labels used as-is.
    #[serde(rename = "raw", alias = "none")]
    Raw,
    /// Correct confident missing labels (0 -> 1).
    #[serde(rename = "corr-fn")]
    CorrFn,
    /// Correct confident missing and wrong labels.
    #[serde(rename = "corr-fn-fp")]
    CorrFnFp,
    /// Correct confident and mask weaker missing-label contradictions.
    #[serde(rename = "corr+mask-fn")]
    CorrMaskFn,
    /// Correction plus masking on both label sides.
    #[serde(rename = "corr+mask-fn-fp")]
    CorrMaskFnFp,
    /// Mask the top percentile of suspected missing labels.
    #[serde(rename = "percentile-mask")]
    PercentileMask,
    /// Correct (instead of mask) the top percentile of suspected missing
    /// labels.
    #[serde(rename = "percentile-corr")]
    PercentileCorr,
    /// Correct absent labels above the class-mean true-positive prediction.
    #[serde(rename = "meanthresh-corr")]
    MeanthreshCorr,
}

impl Mode {
    pub const ALL: [Mode; 8] = [
        Mode::Raw,
        Mode::CorrFn,
        Mode::CorrFnFp,
        Mode::CorrMaskFn,
        Mode::CorrMaskFnFp,
        Mode::PercentileMask,
        Mode::PercentileCorr,
        Mode::MeanthreshCorr,
    ];

    /// Config/directory name.
    pub fn slug(&self) -> &'static str {
        match self {
            Mode::Raw => "raw",
            Mode::CorrFn => "corr-fn",
            Mode::CorrFnFp => "corr-fn-fp",
            Mode::CorrMaskFn => "corr+mask-fn",
            Mode::CorrMaskFnFp => "corr+mask-fn-fp",
            Mode::PercentileMask => "percentile-mask",
            Mode::PercentileCorr => "percentile-corr",
            Mode::MeanthreshCorr => "meanthresh-corr",
        }
    }

    /// Row label of the comparison table.
    pub fn display_row(&self) -> &'static str {
        match self {
            Mode::Raw => "raw labels",
            Mode::CorrFn => "label corr FN",
            Mode::CorrFnFp => "label corr FN+FP",
            Mode::CorrMaskFn => "label corr+masking FN",
            Mode::CorrMaskFnFp => "label corr+masking FN+FP",
            Mode::PercentileMask => "percentile label masking",
            Mode::PercentileCorr => "percentile label corr",
            Mode::MeanthreshCorr => "meanthresh label corr",
        }
    }

    pub fn parse(s: &str) -> Result<Mode, CliError> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
            let valid: Vec<&str> = Mode::ALL.iter().map(|m| m.slug()).collect();
            CliError::Config(format!("unknown mode '{s}' (valid: {})", valid.join(", ")))
        })
    }
}

/// The unified pipeline configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub data: DataConfig,
    pub feature: StftConfig,
    pub augment: AugmentConfig,
    pub enhancement: EnhancementSection,
    pub trainer: TrainerConfig,
    /// Epoch budget of the teacher (defaults to trainer.max_epochs). The
    /// teacher's probabilities drive label enhancement, so it is usually
    /// trained to convergence while students keep the standard budget.
    pub teacher_max_epochs: Option<usize>,
    pub metric: MetricSection,
    /// Modes compared by the experiment command.
    pub modes: Vec<Mode>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        use acd_core::augment::{MicAugmentConfig, MixupConfig, MixupMode, SourceAugmentConfig};
        Self {
            seed: 0,
            output_dir: PathBuf::from("runs/exp"),
            data: DataConfig::default(),
            feature: StftConfig::default(),
            augment: AugmentConfig {
                mixup: MixupConfig {
                    i_max: 2,
                    sigma_s_db: 2.0,
                    sequence_length_s: 10.0,
                    min_crop_s: 5.0,
                    mode: MixupMode::LabelJoin,
                },
                // Desk-scale default: the spectral augmentations are off so a
                // full comparison run stays within a coffee break; enable
                // them per config for larger studies.
                source: SourceAugmentConfig::disabled(),
                mic: MicAugmentConfig::disabled(),
            },
            enhancement: EnhancementSection::default(),
            trainer: TrainerConfig {
                learning_rate: 1e-3,
                weight_decay: 1e-4,
                batch_size: 32,
                epoch_sequences: 800,
                plateau_patience_epochs: 3,
                lr_halving_factor: 0.5,
                max_epochs: 8,
                hidden: vec![128, 64],
                seed: 0,
            },
            teacher_max_epochs: Some(36),
            metric: MetricSection::default(),
            modes: vec![
                Mode::Raw,
                Mode::CorrMaskFn,
                Mode::PercentileMask,
                Mode::PercentileCorr,
            ],
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        default_families(self.data.classes)
            .map_err(|e| CliError::Config(e.to_string()))?;
        for (name, n) in [
            ("data.train_clips", self.data.train_clips),
            ("data.val_clips", self.data.val_clips),
            ("data.test_clips", self.data.test_clips),
        ] {
            if n == 0 {
                return Err(CliError::Config(format!("{name} must be positive")));
            }
        }
        if self.data.polyphony_max == 0 || self.data.polyphony_max > self.data.classes {
            return Err(CliError::Config(format!(
                "data.polyphony_max must be in 1..={}, got {}",
                self.data.classes, self.data.polyphony_max
            )));
        }
        if self.data.duration_s.0 < 0.1 || self.data.duration_s.1 < self.data.duration_s.0 {
            return Err(CliError::Config(format!(
                "bad data.duration_s range {:?}",
                self.data.duration_s
            )));
        }
        for (name, rate) in [
            ("data.fn_rate", self.data.fn_rate),
            ("data.fp_rate", self.data.fp_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(CliError::Config(format!(
                    "{name} must be in [0,1], got {rate}"
                )));
            }
        }
        self.feature
            .validate(self.data.sample_rate)
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.augment
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.trainer
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.enhancement.threshold_t > 0.0 && self.enhancement.threshold_t < 0.5) {
            return Err(CliError::Config(format!(
                "enhancement.threshold_t must be in (0, 0.5), got {}",
                self.enhancement.threshold_t
            )));
        }
        if !(self.enhancement.percentile > 0.0 && self.enhancement.percentile < 100.0) {
            return Err(CliError::Config(format!(
                "enhancement.percentile must be in (0, 100), got {}",
                self.enhancement.percentile
            )));
        }
        if self.modes.is_empty() {
            return Err(CliError::Config("modes must not be empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for m in &self.modes {
            if !seen.insert(m) {
                return Err(CliError::Config(format!("duplicate mode '{}'", m.slug())));
            }
        }
        Ok(())
    }
}

/// Set one dotted-path key in a JSON document; the value parses as JSON
/// when possible and falls back to a string.
fn apply_set(doc: &mut serde_json::Value, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| {
        CliError::Config(format!("--set expects key.path=value, got '{assignment}'"))
    })?;
    let value: serde_json::Value = serde_json::from_str(raw)
        .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut cursor = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !cursor.is_object() {
            return Err(CliError::Config(format!(
                "--set path '{path}' descends into a non-object at '{part}'"
            )));
        }
        let map = cursor.as_object_mut().unwrap();
        if i + 1 == parts.len() {
            map.insert((*part).to_string(), value);
            return Ok(());
        }
        cursor = map
            .entry((*part).to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    unreachable!("split produces at least one part")
}

/// Load a config file (or the defaults), apply `--set` overrides and the
/// seed, and validate.
pub fn load_config(
    path: Option<&Path>,
    sets: &[String],
    seed: Option<u64>,
) -> Result<ExperimentConfig, CliError> {
    let mut doc: serde_json::Value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", p.display()))
            })?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("config {}: {e}", p.display())))?
        }
        None => serde_json::to_value(ExperimentConfig::default()).expect("defaults serialize"),
    };
    for assignment in sets {
        apply_set(&mut doc, assignment)?;
    }
    if let Some(seed) = seed {
        doc["seed"] = serde_json::json!(seed);
    }
    let cfg: ExperimentConfig = serde_json::from_value(doc)
        .map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn set_overrides_nested_fields() {
        let cfg = load_config(
            None,
            &[
                "trainer.learning_rate=0.01".to_string(),
                "data.classes=4".to_string(),
                "modes=[\"raw\",\"corr-fn\"]".to_string(),
            ],
            Some(99),
        )
        .unwrap();
        assert_eq!(cfg.trainer.learning_rate, 0.01);
        assert_eq!(cfg.data.classes, 4);
        assert_eq!(cfg.modes, vec![Mode::Raw, Mode::CorrFn]);
        assert_eq!(cfg.seed, 99);
    }

    #[test]
    fn zero_classes_is_a_config_error() {
        let err = load_config(None, &["data.classes=0".to_string()], None).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn unknown_top_level_key_is_rejected() {
        let err = load_config(None, &["typo_section=1".to_string()], None).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn mode_names_roundtrip() {
        for mode in Mode::ALL {
            assert_eq!(Mode::parse(mode.slug()).unwrap(), mode);
        }
        assert_eq!(Mode::parse("none").unwrap(), Mode::Raw);
        assert!(Mode::parse("bogus").is_err());
    }
}
