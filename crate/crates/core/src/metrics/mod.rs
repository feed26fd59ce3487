//! Chamfer, Hausdorff and F-score between point clouds.

pub mod kdtree;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use kdtree::KdTree;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("F-score threshold must be positive, got {0}")]
    BadThreshold(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudMetrics {
    pub chamfer: f64,
    pub hausdorff: f64,
    /// Percent.
    pub fscore: f64,
    pub precision: f64,
    pub recall: f64,
    pub threshold: f64,
}

/// Distance from every point of `a` to its nearest point in `b`.
pub fn nearest_distances(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<Vec<f64>, MetricsError> {
    if b.is_empty() {
        return Err(MetricsError::EmptyCloud);
    }
    let tree = KdTree::new(b);
    Ok(a.par_iter().map(|p| tree.nearest_squared(p).sqrt()).collect())
}

fn both(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<(Vec<f64>, Vec<f64>), MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptyCloud);
    }
    Ok((nearest_distances(a, b)?, nearest_distances(b, a)?))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

fn fscore_from(da: &[f64], db: &[f64], threshold: f64) -> (f64, f64, f64) {
    let p = da.iter().filter(|&&d| d <= threshold).count() as f64 / da.len() as f64;
    let r = db.iter().filter(|&&d| d <= threshold).count() as f64 / db.len() as f64;
    let f = if p + r > 0.0 { 200.0 * p * r / (p + r) } else { 0.0 };
    (f, p, r)
}

/// `(mean_a d(a, B) + mean_b d(b, A)) / 2`.
pub fn chamfer(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<f64, MetricsError> {
    let (da, db) = both(a, b)?;
    Ok(0.5 * (mean(&da) + mean(&db)))
}

pub fn hausdorff(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<f64, MetricsError> {
    let (da, db) = both(a, b)?;
    Ok(max(&da).max(max(&db)))
}

/// Harmonic mean of precision (share of `a` within `threshold` of `b`) and recall, in
/// percent.
pub fn fscore(a: &[[f64; 3]], b: &[[f64; 3]], threshold: f64) -> Result<f64, MetricsError> {
    if !(threshold > 0.0) {
        return Err(MetricsError::BadThreshold(threshold));
    }
    let (da, db) = both(a, b)?;
    Ok(fscore_from(&da, &db, threshold).0)
}

/// All metrics from one pair of nearest-distance passes. `test` plays the role of `a`.
pub fn evaluate(test: &[[f64; 3]], reference: &[[f64; 3]], threshold: f64) -> Result<CloudMetrics, MetricsError> {
    if !(threshold > 0.0) {
        return Err(MetricsError::BadThreshold(threshold));
    }
    let (da, db) = both(test, reference)?;
    let (fscore, precision, recall) = fscore_from(&da, &db, threshold);
    Ok(CloudMetrics {
        chamfer: 0.5 * (mean(&da) + mean(&db)),
        hausdorff: max(&da).max(max(&db)),
        fscore,
        precision,
        recall,
        threshold,
    })
}
