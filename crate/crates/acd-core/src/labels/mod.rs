//! Tri-state label algebra and label enhancement.
//!
//! Labels are per-class and take one of three states: absent, present, or
//! masked (excluded from the loss). Enhancement consults a teacher model's
//! per-class probabilities and either corrects a label the teacher
//! contradicts with very high confidence, or masks it when the contradiction
//! is weaker.

mod baselines;
mod enhance;
mod teacher;

pub use baselines::{
    meanthresh_correct_baseline, percentile_baseline, MeanthreshOutcome, PercentileAction,
    PercentileDirection,
};
pub use enhance::{enhance, enhance_dataset, ClassTransitions, EnhancementConfig, EnhancementReport};
pub use teacher::{
    normalize_teacher_scores, read_teacher_jsonl, write_teacher_jsonl, TeacherPrediction,
    TeacherPredictions,
};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// State of one class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelState {
    Absent,
    Present,
    Masked,
}

impl LabelState {
    pub fn is_masked(self) -> bool {
        self == LabelState::Masked
    }

    /// Loss target for this state; masked states carry no target.
    pub fn target(self) -> Option<f32> {
        match self {
            LabelState::Absent => Some(0.0),
            LabelState::Present => Some(1.0),
            LabelState::Masked => None,
        }
    }
}

/// Per-class labels in {absent, present, masked}.
///
/// Serializes as an array of `0 | 1 | null`, the wire format of manifests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriStateLabelVector(Vec<LabelState>);

impl TriStateLabelVector {
    pub fn new(states: Vec<LabelState>) -> Self {
        Self(states)
    }

    pub fn all_absent(classes: usize) -> Self {
        Self(vec![LabelState::Absent; classes])
    }

    pub fn from_binary(present: &[bool]) -> Self {
        Self(
            present
                .iter()
                .map(|&p| if p { LabelState::Present } else { LabelState::Absent })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, class: usize) -> LabelState {
        self.0[class]
    }

    pub fn set(&mut self, class: usize, state: LabelState) {
        self.0[class] = state;
    }

    pub fn states(&self) -> &[LabelState] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = LabelState> + '_ {
        self.0.iter().copied()
    }

    /// True when no entry is masked.
    pub fn is_binary(&self) -> bool {
        self.0.iter().all(|s| !s.is_masked())
    }

    pub fn count(&self, state: LabelState) -> usize {
        self.0.iter().filter(|&&s| s == state).count()
    }

    /// Elementwise OR that tolerates masks: present wins over everything,
    /// masked wins over absent. Used when joining labels of clips whose
    /// labels were already partially masked by enhancement.
    pub fn join_masked(&self, other: &Self) -> Result<Self, LabelError> {
        if self.len() != other.len() {
            return Err(LabelError::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| match (a, b) {
                    (LabelState::Present, _) | (_, LabelState::Present) => LabelState::Present,
                    (LabelState::Masked, _) | (_, LabelState::Masked) => LabelState::Masked,
                    _ => LabelState::Absent,
                })
                .collect(),
        ))
    }
}

/// Elementwise OR of two binary label vectors.
///
/// Masked inputs are rejected: joining is defined on raw binary labels only.
pub fn join(
    a: &TriStateLabelVector,
    b: &TriStateLabelVector,
) -> Result<TriStateLabelVector, LabelError> {
    if a.len() != b.len() {
        return Err(LabelError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if !a.is_binary() || !b.is_binary() {
        return Err(LabelError::MaskedInput("join"));
    }
    Ok(TriStateLabelVector(
        a.0.iter()
            .zip(&b.0)
            .map(|(&x, &y)| {
                if x == LabelState::Present || y == LabelState::Present {
                    LabelState::Present
                } else {
                    LabelState::Absent
                }
            })
            .collect(),
    ))
}

impl Serialize for TriStateLabelVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let encoded: Vec<Option<u8>> = self
            .0
            .iter()
            .map(|s| match s {
                LabelState::Absent => Some(0),
                LabelState::Present => Some(1),
                LabelState::Masked => None,
            })
            .collect();
        encoded.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TriStateLabelVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let encoded: Vec<Option<u8>> = Vec::deserialize(deserializer)?;
        let states = encoded
            .into_iter()
            .map(|v| match v {
                Some(0) => Ok(LabelState::Absent),
                Some(1) => Ok(LabelState::Present),
                None => Ok(LabelState::Masked),
                Some(other) => Err(D::Error::custom(format!(
                    "label entries must be 0, 1 or null, got {other}"
                ))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self(states))
    }
}

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("label vectors have different lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("masked labels are not allowed in {0}")]
    MaskedInput(&'static str),
    #[error("enhancement threshold must be in (0, 0.5), got {0}")]
    ThresholdOutOfRange(f64),
    #[error("percentile must be in (0, 100), got {0}")]
    PercentileOutOfRange(f64),
    #[error("prediction length {got} does not match {want} classes (clip {clip_id})")]
    PredictionLength {
        clip_id: String,
        got: usize,
        want: usize,
    },
    #[error("probability {value} for clip {clip_id} is outside [0, 1]")]
    ProbabilityOutOfRange { clip_id: String, value: f64 },
    #[error("no teacher prediction for clip {0}")]
    MissingPrediction(String),
    #[error("non-finite teacher score")]
    NonFiniteScore,
    #[error("failed to read {path}: {detail}")]
    Io { path: String, detail: String },
}
