//! Teacher prediction files and zero-shot score normalization.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LabelError;

/// Per-class probabilities for one clip, keyed to a manifest entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherPrediction {
    pub clip_id: String,
    pub probs: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct TeacherRowWire {
    clip_id: String,
    #[serde(default)]
    probs: Option<Vec<f64>>,
    #[serde(default)]
    scores: Option<Vec<f64>>,
}

/// Prediction set keyed by clip id, iteration order deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TeacherPredictions {
    map: BTreeMap<String, Vec<f64>>,
}

impl TeacherPredictions {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, clip_id: String, probs: Vec<f64>) {
        self.map.insert(clip_id, probs);
    }

    pub fn get(&self, clip_id: &str) -> Option<&Vec<f64>> {
        self.map.get(clip_id)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Vec<f64>)> {
        self.map.iter()
    }
}

/// Read a teacher prediction JSONL file.
///
/// Rows carry either a `probs` array (probabilities in [0,1]) or a raw
/// `scores` array; raw scores are converted through
/// [`normalize_teacher_scores`] with the given presence threshold applied
/// only to derive probabilities (the binary side is dropped here).
pub fn read_teacher_jsonl(path: impl AsRef<Path>) -> Result<TeacherPredictions, LabelError> {
    let path = path.as_ref();
    let io = |detail: String| LabelError::Io {
        path: path.display().to_string(),
        detail,
    };
    let file = std::fs::File::open(path).map_err(|e| io(e.to_string()))?;
    let mut preds = TeacherPredictions::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: TeacherRowWire = serde_json::from_str(&line)
            .map_err(|e| io(format!("line {}: {e}", lineno + 1)))?;
        let probs = match (row.probs, row.scores) {
            (Some(probs), _) => {
                for &p in &probs {
                    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                        return Err(LabelError::ProbabilityOutOfRange {
                            clip_id: row.clip_id,
                            value: p,
                        });
                    }
                }
                probs
            }
            (None, Some(scores)) => normalize_teacher_scores(&scores, 0.0)?.0,
            (None, None) => {
                return Err(io(format!(
                    "line {}: row has neither probs nor scores",
                    lineno + 1
                )))
            }
        };
        preds.insert(row.clip_id, probs);
    }
    Ok(preds)
}

/// Write predictions as JSONL rows `{"clip_id": ..., "probs": [...]}`.
pub fn write_teacher_jsonl(
    path: impl AsRef<Path>,
    preds: &TeacherPredictions,
) -> Result<(), LabelError> {
    let path = path.as_ref();
    let io = |detail: String| LabelError::Io {
        path: path.display().to_string(),
        detail,
    };
    let mut out =
        std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| io(e.to_string()))?);
    for (clip_id, probs) in preds.iter() {
        let row = TeacherPrediction {
            clip_id: clip_id.clone(),
            probs: probs.clone(),
        };
        serde_json::to_writer(&mut out, &row).map_err(|e| io(e.to_string()))?;
        out.write_all(b"\n").map_err(|e| io(e.to_string()))?;
    }
    out.flush().map_err(|e| io(e.to_string()))?;
    Ok(())
}

/// Softmax-normalize raw per-class scores and threshold for presence.
///
/// Returns the normalized probabilities (summing to 1) and the binary
/// presence decisions `prob > threshold` (strict).
pub fn normalize_teacher_scores(
    raw_scores: &[f64],
    threshold: f64,
) -> Result<(Vec<f64>, Vec<bool>), LabelError> {
    if raw_scores.iter().any(|s| !s.is_finite()) {
        return Err(LabelError::NonFiniteScore);
    }
    if raw_scores.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    let max = raw_scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = raw_scores.iter().map(|&s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let probs: Vec<f64> = exps.into_iter().map(|e| e / sum).collect();
    let labels = probs.iter().map(|&p| p > threshold).collect();
    Ok((probs, labels))
}
