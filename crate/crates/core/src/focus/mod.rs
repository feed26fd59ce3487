//! Focus-area localization from camera poses: per-camera ray-concentration depth, the
//! growing-frustum semimetric, HDBSCAN over the pairwise matrix, and cluster-to-cube
//! conversion.

pub mod areas;
pub mod depth;
pub mod hdbscan;
pub mod semimetric;

use serde::{Deserialize, Serialize};

pub use areas::{detect_focus_areas, focus_areas_from_clusters};
pub use depth::{build_caustic_points, optimal_ray_depth, CausticPoint, TSearch};
pub use hdbscan::{hdbscan, Clustering};
pub use semimetric::{distance_matrix, frustum_semimetric};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FocusError {
    #[error("need at least {needed} cameras, found {found}")]
    TooFewCameras { needed: usize, found: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrfConfig {
    pub max_areas: usize,
    pub neighbors: usize,
    pub alpha_deg: f64,
    pub min_cluster_size: usize,
    pub single_cluster: bool,
    /// Absolute depth search range; derived from the camera layout when absent.
    pub t_search: Option<TSearch>,
}

impl Default for LrfConfig {
    fn default() -> Self {
        Self {
            max_areas: 5,
            neighbors: 20,
            alpha_deg: 10.0,
            min_cluster_size: 20,
            single_cluster: true,
            t_search: None,
        }
    }
}

impl LrfConfig {
    pub fn validate(&self) -> Result<(), FocusError> {
        if self.neighbors == 0 {
            return Err(FocusError::Config("neighbors must be at least 1".into()));
        }
        if !(self.alpha_deg > 0.0 && self.alpha_deg < 90.0) {
            return Err(FocusError::Config(format!("alpha must lie in (0, 90) degrees, got {}", self.alpha_deg)));
        }
        if self.min_cluster_size < 2 {
            return Err(FocusError::Config("min_cluster_size must be at least 2".into()));
        }
        if let Some(t) = &self.t_search {
            t.validate()?;
        }
        Ok(())
    }
}
