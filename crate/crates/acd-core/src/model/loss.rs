//! Masked binary cross-entropy.

use super::{Matrix, ModelError};
use crate::scalar::Scalar;

/// Batch label matrix: `None` entries are masked and carry zero weight.
/// Unmasked entries are targets in [0, 1] (fractional targets appear only
/// in weighted-mixing mode).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Option<T>>,
}

impl<T: Scalar> LabelMatrix<T> {
    pub fn from_rows(rows: Vec<Vec<Option<T>>>) -> Self {
        let n = rows.len();
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(n * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged label rows");
            data.extend(row);
        }
        Self { rows: n, cols, data }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Option<T> {
        self.data[r * self.cols + c]
    }

    pub fn unmasked_count(&self) -> usize {
        self.data.iter().filter(|e| e.is_some()).count()
    }
}

/// Mean binary cross-entropy over unmasked entries.
///
/// Returns the loss and the per-element weight matrix (1 for unmasked, 0
/// for masked). With every entry masked the loss is 0 by definition.
pub fn masked_bce<T: Scalar>(
    probs: &Matrix<T>,
    labels: &LabelMatrix<T>,
) -> Result<(T, Matrix<T>), ModelError> {
    if labels.rows != probs.rows || labels.cols != probs.cols {
        return Err(ModelError::LabelShape {
            got_rows: labels.rows,
            got_cols: labels.cols,
            want_rows: probs.rows,
            want_cols: probs.cols,
        });
    }
    let mut weights = Matrix::zeros(probs.rows, probs.cols);
    let mut sum = T::zero();
    let mut count = 0usize;
    for r in 0..probs.rows {
        for c in 0..probs.cols {
            if let Some(y) = labels.at(r, c) {
                let p = probs.at(r, c);
                sum -= y * p.ln() + (T::one() - y) * (T::one() - p).ln();
                *weights.at_mut(r, c) = T::one();
                count += 1;
            }
        }
    }
    let loss = if count == 0 {
        T::zero()
    } else {
        sum / T::from_usize(count).unwrap()
    };
    Ok((loss, weights))
}
