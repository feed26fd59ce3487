//! Edge-aware triplet sampling and the collinearity depth loss.

pub mod edges;
pub mod loss;
pub mod triplet;

use thiserror::Error;

pub use edges::{detect_edges, CannyParams, EdgeMap};
pub use loss::{collinearity_loss, expected_midpoint_depth, CollinearityLoss, CollinearityParams};
pub use triplet::{bresenham, sample_triplet, PixelTriplet};

#[derive(Debug, Error, PartialEq)]
pub enum CollinearityError {
    #[error("ray directions are too close to parallel")]
    DegenerateDirections,
    #[error("thresholds must satisfy 0 < low < high, got low={low}, high={high}")]
    BadThresholds { low: f64, high: f64 },
}
