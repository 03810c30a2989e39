//! Threshold-independent and thresholded evaluation: precision-recall
//! curves, average precision, mAP and class-average accuracy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labels::{LabelState, TriStateLabelVector};
use crate::scalar::Scalar;

/// One point of a precision-recall curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint<T> {
    pub threshold: T,
    pub precision: T,
    pub recall: T,
}

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("scores and labels have different lengths: {scores} vs {labels}")]
    ShapeMismatch { scores: usize, labels: usize },
    #[error("no class has a positive example; nothing to evaluate")]
    NoEvaluableClasses,
}

/// Precision-recall curve over descending score cuts.
///
/// Tied scores are processed as one block, so every threshold in the curve
/// is a distinct score value. The final point always has recall 1 when at
/// least one positive exists.
pub fn pr_curve<T: Scalar>(scores: &[T], labels: &[bool]) -> Vec<PrPoint<T>> {
    assert_eq!(scores.len(), labels.len(), "scores/labels length mismatch");
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));

    let mut points = Vec::new();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let cut = scores[order[i]];
        // Absorb the whole tie block before emitting a point.
        while i < order.len() && scores[order[i]] == cut {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(PrPoint {
            threshold: cut,
            precision: T::from_usize(tp).unwrap() / T::from_usize(tp + fp).unwrap(),
            recall: T::from_usize(tp).unwrap() / T::from_usize(positives).unwrap(),
        });
    }
    points
}

/// Average precision: area under the precision-recall curve with step
/// interpolation, AP = sum over points of (R_n - R_{n-1}) * P_n.
///
/// Returns `None` when the class has no positive example (undefined rather
/// than silently 0).
pub fn average_precision<T: Scalar>(scores: &[T], labels: &[bool]) -> Option<T> {
    let curve = pr_curve(scores, labels);
    if curve.is_empty() {
        return None;
    }
    let mut ap = T::zero();
    let mut prev_recall = T::zero();
    for p in &curve {
        ap += (p.recall - prev_recall) * p.precision;
        prev_recall = p.recall;
    }
    Some(ap)
}

/// Fraction of examples where `score > threshold` agrees with the label.
///
/// Returns `None` for an empty class.
pub fn class_accuracy<T: Scalar>(scores: &[T], labels: &[bool], threshold: T) -> Option<T> {
    if scores.is_empty() {
        return None;
    }
    assert_eq!(scores.len(), labels.len(), "scores/labels length mismatch");
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|(&s, &l)| (s > threshold) == l)
        .count();
    Some(T::from_usize(correct).unwrap() / T::from_usize(scores.len()).unwrap())
}

/// Evaluation summary across classes.
///
/// Mean values are unweighted means over the evaluable classes; classes
/// without a positive example are skipped and listed instead of being
/// scored 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub per_class_ap: Vec<Option<f64>>,
    pub mean_ap: f64,
    pub per_class_accuracy: Vec<Option<f64>>,
    pub mean_accuracy: f64,
    pub threshold_used: f64,
    pub skipped_classes: Vec<usize>,
    /// Label entries excluded from the computation because they were masked.
    pub masked_entries: u64,
}

/// Evaluate per-class AP and accuracy over a dataset.
///
/// `scores[b][c]` is the predicted probability of class `c` for example
/// `b`; labels may contain masked entries, which are excluded per class and
/// counted in the result.
pub fn evaluate(
    scores: &[Vec<f64>],
    labels: &[TriStateLabelVector],
    threshold: f64,
) -> Result<EvalResult, MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::ShapeMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    let classes = labels.first().map_or(0, |l| l.len());
    let mut per_class_ap = Vec::with_capacity(classes);
    let mut per_class_accuracy = Vec::with_capacity(classes);
    let mut skipped_classes = Vec::new();
    let mut masked_entries = 0u64;

    for class in 0..classes {
        let mut class_scores = Vec::new();
        let mut class_labels = Vec::new();
        for (row_scores, row_labels) in scores.iter().zip(labels) {
            match row_labels.get(class) {
                LabelState::Masked => masked_entries += 1,
                state => {
                    class_scores.push(row_scores[class]);
                    class_labels.push(state == LabelState::Present);
                }
            }
        }
        let ap = average_precision(&class_scores, &class_labels);
        if ap.is_none() {
            skipped_classes.push(class);
        }
        per_class_ap.push(ap);
        per_class_accuracy.push(class_accuracy(&class_scores, &class_labels, threshold));
    }

    let evaluable: Vec<f64> = per_class_ap.iter().filter_map(|&ap| ap).collect();
    if evaluable.is_empty() {
        return Err(MetricError::NoEvaluableClasses);
    }
    let mean_ap = evaluable.iter().sum::<f64>() / evaluable.len() as f64;
    let accuracies: Vec<f64> = per_class_accuracy.iter().filter_map(|&a| a).collect();
    let mean_accuracy = accuracies.iter().sum::<f64>() / accuracies.len().max(1) as f64;

    Ok(EvalResult {
        per_class_ap,
        mean_ap,
        per_class_accuracy,
        mean_accuracy,
        threshold_used: threshold,
        skipped_classes,
        masked_entries,
    })
}

/// Per-class PR curves as CSV (`class,threshold,precision,recall`).
pub fn pr_curves_csv(scores: &[Vec<f64>], labels: &[TriStateLabelVector]) -> String {
    let classes = labels.first().map_or(0, |l| l.len());
    let mut out = String::from("class,threshold,precision,recall\n");
    for class in 0..classes {
        let mut class_scores = Vec::new();
        let mut class_labels = Vec::new();
        for (row_scores, row_labels) in scores.iter().zip(labels) {
            if row_labels.get(class) != LabelState::Masked {
                class_scores.push(row_scores[class]);
                class_labels.push(row_labels.get(class) == LabelState::Present);
            }
        }
        for p in pr_curve(&class_scores, &class_labels) {
            out.push_str(&format!(
                "{class},{},{},{}\n",
                p.threshold, p.precision, p.recall
            ));
        }
    }
    out
}

/// Bar chart of per-class AP as a standalone SVG document.
pub fn render_ap_svg(result: &EvalResult, class_names: Option<&[String]>) -> String {
    let classes = result.per_class_ap.len();
    let bar_w = 48.0;
    let gap = 12.0;
    let chart_h = 220.0;
    let left = 50.0;
    let bottom = 260.0;
    let width = left + classes as f64 * (bar_w + gap) + 20.0;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"320\" \
         font-family=\"sans-serif\" font-size=\"12\">\n",
        width
    );
    svg.push_str(&format!(
        "<text x=\"{left}\" y=\"20\">per-class AP (mean {:.3})</text>\n",
        result.mean_ap
    ));
    for tick in 0..=5 {
        let frac = tick as f64 / 5.0;
        let y = bottom - frac * chart_h;
        svg.push_str(&format!(
            "<line x1=\"{left}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{frac:.1}</text>\n",
            width - 20.0,
            left - 6.0,
            y + 4.0
        ));
    }
    for (class, ap) in result.per_class_ap.iter().enumerate() {
        let x = left + class as f64 * (bar_w + gap);
        let label = class_names
            .and_then(|names| names.get(class).cloned())
            .unwrap_or_else(|| format!("c{class}"));
        match ap {
            Some(v) => {
                let h = v * chart_h;
                svg.push_str(&format!(
                    "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"{bar_w}\" height=\"{h:.1}\" fill=\"#4878a8\"/>\n\
                     <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{v:.2}</text>\n",
                    bottom - h,
                    x + bar_w / 2.0,
                    bottom - h - 4.0
                ));
            }
            None => {
                svg.push_str(&format!(
                    "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" fill=\"#999\">n/a</text>\n",
                    x + bar_w / 2.0,
                    bottom - 6.0
                ));
            }
        }
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{label}</text>\n",
            x + bar_w / 2.0,
            bottom + 16.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
