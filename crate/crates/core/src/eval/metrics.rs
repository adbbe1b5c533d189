use alloc::vec::Vec;

use crate::model::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("sequence length mismatch: expected {expected}, found {found}")]
pub struct MetricError {
    pub expected: usize,
    pub found: usize,
}

fn check<T>(pred: &[T], truth: &[T]) -> Result<(), MetricError> {
    if pred.len() != truth.len() || truth.is_empty() {
        return Err(MetricError {
            expected: truth.len(),
            found: pred.len(),
        });
    }
    Ok(())
}

/// Euclidean distance at every step.
pub fn displacements(pred: &[Point], truth: &[Point]) -> Result<Vec<f64>, MetricError> {
    check(pred, truth)?;
    Ok(pred
        .iter()
        .zip(truth)
        .map(|(p, t)| libm::hypot(p[0] - t[0], p[1] - t[1]))
        .collect())
}

/// Mean Euclidean distance over pedestrians and steps. `pred[k]` and
/// `truth[k]` are pedestrian `k`'s future tracks.
pub fn ade(pred: &[Vec<Point>], truth: &[Vec<Point>]) -> Result<f64, MetricError> {
    check(pred, truth)?;
    let (mut total, mut count) = (0.0, 0usize);
    for (p, t) in pred.iter().zip(truth) {
        for d in displacements(p, t)? {
            total += d;
        }
        count += p.len();
    }
    Ok(total / count as f64)
}

/// Mean Euclidean distance at the final step.
pub fn fde(pred: &[Vec<Point>], truth: &[Vec<Point>]) -> Result<f64, MetricError> {
    check(pred, truth)?;
    let mut total = 0.0;
    for (p, t) in pred.iter().zip(truth) {
        check(p, t)?;
        let (a, b) = (p[p.len() - 1], t[t.len() - 1]);
        total += libm::hypot(a[0] - b[0], a[1] - b[1]);
    }
    Ok(total / pred.len() as f64)
}
