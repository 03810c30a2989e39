//! Teacher-based label correction and masking.

use serde::{Deserialize, Serialize};

use super::{LabelError, LabelState, TeacherPredictions, TriStateLabelVector};
use crate::manifest::ManifestRow;

/// Enhancement thresholds and which rules are active.
///
/// `correct_fn` fixes missing labels (0 -> 1 when the teacher is very
/// confident the class is present); `correct_fp` fixes wrong labels
/// (1 -> 0). `mask_fn` / `mask_fp` mask the same contradictions at weaker
/// confidence instead of correcting them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnhancementConfig {
    /// Confidence margin T in (0, 0.5): corrections fire outside
    /// (T, 1-T), maskings inside (T, 0.5) and (0.5, 1-T).
    pub threshold_t: f64,
    pub correct_fn: bool,
    pub correct_fp: bool,
    pub mask_fn: bool,
    pub mask_fp: bool,
}

impl Default for EnhancementConfig {
    fn default() -> Self {
        Self {
            threshold_t: 0.05,
            correct_fn: false,
            correct_fp: false,
            mask_fn: false,
            mask_fp: false,
        }
    }
}

impl EnhancementConfig {
    pub fn validate(&self) -> Result<(), LabelError> {
        if !(self.threshold_t > 0.0 && self.threshold_t < 0.5) {
            return Err(LabelError::ThresholdOutOfRange(self.threshold_t));
        }
        Ok(())
    }
}

/// Transition counts for one class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassTransitions {
    /// 0 -> 1 corrections.
    pub corrected_to_present: u64,
    /// 1 -> 0 corrections.
    pub corrected_to_absent: u64,
    /// 0 -> masked.
    pub masked_from_absent: u64,
    /// 1 -> masked.
    pub masked_from_present: u64,
}

impl ClassTransitions {
    pub fn total(&self) -> u64 {
        self.corrected_to_present
            + self.corrected_to_absent
            + self.masked_from_absent
            + self.masked_from_present
    }

    fn add(&mut self, other: &ClassTransitions) {
        self.corrected_to_present += other.corrected_to_present;
        self.corrected_to_absent += other.corrected_to_absent;
        self.masked_from_absent += other.masked_from_absent;
        self.masked_from_present += other.masked_from_present;
    }
}

/// Per-class and total transition tallies of one enhancement pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnhancementReport {
    pub per_class: Vec<ClassTransitions>,
    pub totals: ClassTransitions,
}

impl EnhancementReport {
    pub fn new(classes: usize) -> Self {
        Self {
            per_class: vec![ClassTransitions::default(); classes],
            totals: ClassTransitions::default(),
        }
    }

    pub fn changed(&self) -> u64 {
        self.totals.total()
    }

    fn merge(&mut self, other: &EnhancementReport) {
        for (mine, theirs) in self.per_class.iter_mut().zip(&other.per_class) {
            mine.add(theirs);
        }
        self.totals.add(&other.totals);
    }
}

/// Apply the correction and masking rules to one label vector.
///
/// Per class exactly one outcome fires, all comparisons strict:
/// - absent and prediction > 1-T: corrected to present;
/// - present and prediction < T: corrected to absent;
/// - absent and 0.5 < prediction < 1-T: masked;
/// - present and T < prediction < 0.5: masked;
/// - otherwise unchanged.
///
/// Entries that are already masked are left untouched, so re-running on an
/// enhanced vector is a no-op for them.
pub fn enhance(
    labels: &TriStateLabelVector,
    probs: &[f64],
    cfg: &EnhancementConfig,
) -> Result<(TriStateLabelVector, EnhancementReport), LabelError> {
    cfg.validate()?;
    if probs.len() != labels.len() {
        return Err(LabelError::PredictionLength {
            clip_id: String::new(),
            got: probs.len(),
            want: labels.len(),
        });
    }
    let t = cfg.threshold_t;
    let mut out = labels.clone();
    let mut report = EnhancementReport::new(labels.len());
    for (class, (state, &p)) in labels.iter().zip(probs).enumerate() {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(LabelError::ProbabilityOutOfRange {
                clip_id: String::new(),
                value: p,
            });
        }
        let tally = &mut report.per_class[class];
        match state {
            LabelState::Absent if cfg.correct_fn && p > 1.0 - t => {
                out.set(class, LabelState::Present);
                tally.corrected_to_present += 1;
            }
            LabelState::Present if cfg.correct_fp && p < t => {
                out.set(class, LabelState::Absent);
                tally.corrected_to_absent += 1;
            }
            LabelState::Absent if cfg.mask_fn && p > 0.5 && p < 1.0 - t => {
                out.set(class, LabelState::Masked);
                tally.masked_from_absent += 1;
            }
            LabelState::Present if cfg.mask_fp && p > t && p < 0.5 => {
                out.set(class, LabelState::Masked);
                tally.masked_from_present += 1;
            }
            _ => {}
        }
    }
    let mut totals = ClassTransitions::default();
    for tally in &report.per_class {
        totals.add(tally);
    }
    report.totals = totals;
    Ok((out, report))
}

/// Enhance every row of a manifest against its teacher prediction.
///
/// A row without a prediction is a hard error naming the clip.
pub fn enhance_dataset(
    rows: &[ManifestRow],
    preds: &TeacherPredictions,
    cfg: &EnhancementConfig,
) -> Result<(Vec<ManifestRow>, EnhancementReport), LabelError> {
    cfg.validate()?;
    let classes = rows.first().map_or(0, |r| r.labels.len());
    let mut report = EnhancementReport::new(classes);
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let probs = preds
            .get(&row.path)
            .ok_or_else(|| LabelError::MissingPrediction(row.path.clone()))?;
        if probs.len() != row.labels.len() {
            return Err(LabelError::PredictionLength {
                clip_id: row.path.clone(),
                got: probs.len(),
                want: row.labels.len(),
            });
        }
        let (labels, row_report) = enhance(&row.labels, probs, cfg)?;
        report.merge(&row_report);
        out.push(ManifestRow {
            path: row.path.clone(),
            labels,
            duration_s: row.duration_s,
        });
    }
    Ok((out, report))
}
