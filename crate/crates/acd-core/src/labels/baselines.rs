//! Prior-work label cleaning baselines: percentile masking/correction and
//! mean-threshold correction.

use serde::{Deserialize, Serialize};

use super::{LabelError, LabelState, TeacherPredictions};
use crate::manifest::ManifestRow;

/// Which side of the labels the percentile baseline operates on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PercentileDirection {
    /// Suspected missing labels: absent entries the teacher ranks highest.
    FalseNegative,
    /// Suspected wrong labels: present entries the teacher ranks lowest.
    FalsePositive,
}

/// What to do with the selected entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PercentileAction {
    Mask,
    Correct,
}

/// Result of a percentile pass.
#[derive(Debug, Clone, Serialize)]
pub struct PercentileOutcome {
    pub rows: Vec<ManifestRow>,
    /// Entries eligible for selection (absent or present depending on
    /// direction).
    pub eligible: usize,
    /// Entries actually changed: round(percentile/100 * eligible).
    pub selected: usize,
    /// Set for the false-positive direction, which extends the cited
    /// missing-label method.
    pub note: Option<String>,
}

/// Mask or correct the top/bottom `percentile` percent of label/prediction
/// contradictions, ranked by teacher confidence.
///
/// For the false-negative direction the `percentile` fraction of absent
/// entries with the highest predictions is selected; the false-positive
/// direction symmetrically selects present entries with the lowest
/// predictions. Ties at the cutoff break by (clip_id, class) order.
pub fn percentile_baseline(
    rows: &[ManifestRow],
    preds: &TeacherPredictions,
    percentile: f64,
    direction: PercentileDirection,
    action: PercentileAction,
) -> Result<PercentileOutcome, LabelError> {
    if !(percentile > 0.0 && percentile < 100.0) {
        return Err(LabelError::PercentileOutOfRange(percentile));
    }
    let target_state = match direction {
        PercentileDirection::FalseNegative => LabelState::Absent,
        PercentileDirection::FalsePositive => LabelState::Present,
    };

    // Gather (prob, clip_id, class) for every eligible entry.
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (row_idx, row) in rows.iter().enumerate() {
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
        for (class, state) in row.labels.iter().enumerate() {
            if state == target_state {
                candidates.push((probs[class], row_idx, class));
            }
        }
    }

    let eligible = candidates.len();
    let selected = (percentile / 100.0 * eligible as f64).round() as usize;

    // Most suspicious first; ties break by (clip_id, class).
    candidates.sort_by(|a, b| {
        let by_prob = match direction {
            PercentileDirection::FalseNegative => b.0.total_cmp(&a.0),
            PercentileDirection::FalsePositive => a.0.total_cmp(&b.0),
        };
        by_prob.then_with(|| (rows[a.1].path.as_str(), a.2).cmp(&(rows[b.1].path.as_str(), b.2)))
    });

    let mut out = rows.to_vec();
    for &(_, row_idx, class) in candidates.iter().take(selected) {
        let new_state = match (action, direction) {
            (PercentileAction::Mask, _) => LabelState::Masked,
            (PercentileAction::Correct, PercentileDirection::FalseNegative) => LabelState::Present,
            (PercentileAction::Correct, PercentileDirection::FalsePositive) => LabelState::Absent,
        };
        out[row_idx].labels.set(class, new_state);
    }

    let note = match direction {
        PercentileDirection::FalsePositive => Some("extended baseline".to_string()),
        PercentileDirection::FalseNegative => None,
    };
    Ok(PercentileOutcome {
        rows: out,
        eligible,
        selected,
        note,
    })
}

/// Result of the mean-threshold correction pass.
#[derive(Debug, Clone, Serialize)]
pub struct MeanthreshOutcome {
    pub rows: Vec<ManifestRow>,
    /// Mean true-positive prediction per class; `None` where the class had
    /// no present example and was skipped.
    pub per_class_threshold: Vec<Option<f64>>,
    pub skipped_classes: Vec<usize>,
    pub corrected: u64,
}

/// Correct absent labels whose prediction exceeds the class-wise mean
/// prediction over present examples (strict inequality).
pub fn meanthresh_correct_baseline(
    rows: &[ManifestRow],
    preds: &TeacherPredictions,
) -> Result<MeanthreshOutcome, LabelError> {
    let classes = rows.first().map_or(0, |r| r.labels.len());
    let mut sums = vec![0.0f64; classes];
    let mut counts = vec![0usize; classes];
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
        for (class, state) in row.labels.iter().enumerate() {
            if state == LabelState::Present {
                sums[class] += probs[class];
                counts[class] += 1;
            }
        }
    }

    let per_class_threshold: Vec<Option<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &n)| if n > 0 { Some(s / n as f64) } else { None })
        .collect();
    let skipped_classes: Vec<usize> = per_class_threshold
        .iter()
        .enumerate()
        .filter_map(|(c, t)| t.is_none().then_some(c))
        .collect();

    let mut corrected = 0u64;
    let mut out = rows.to_vec();
    for row in &mut out {
        let probs = preds.get(&row.path).expect("checked above");
        for (class, threshold) in per_class_threshold.iter().enumerate() {
            if let Some(theta) = threshold {
                if row.labels.get(class) == LabelState::Absent && probs[class] > *theta {
                    row.labels.set(class, LabelState::Present);
                    corrected += 1;
                }
            }
        }
    }
    Ok(MeanthreshOutcome {
        rows: out,
        per_class_threshold,
        skipped_classes,
        corrected,
    })
}
