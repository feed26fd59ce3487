//! Radiance fields: the query abstraction, analytic oracle scenes and the trainable
//! multi-branch hash field.

pub mod analytic;
pub mod checkpoint;
pub mod contract;
pub mod hash_grid;
pub mod mlp;
pub mod sh;
pub mod toy;
pub mod train;

use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::geometry::Vec3;

pub use analytic::{AnalyticField, Shape, Texture};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use toy::{Branch, ToyFieldConfig, ToyHashField};
pub use train::{global_box, train_toy, TrainConfig, TrainReport};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    /// Volume density, inverse meters.
    pub density: f64,
    pub color: [f64; 3],
}

impl FieldSample {
    pub const EMPTY: Self = Self {
        density: 0.0,
        color: [0.0; 3],
    };
}

/// Density and color as a function of position and viewing direction.
///
/// Implementations must be deterministic and safe to query from many threads.
pub trait RadianceField: Sync {
    fn query(&self, p: &Vec3, dir: &Vec3) -> FieldSample;

    /// Evaluates every position of one ray. Implementations may batch.
    fn query_ray(&self, positions: &[Vec3], dir: &Vec3, out: &mut Vec<FieldSample>) {
        out.clear();
        out.extend(positions.iter().map(|p| self.query(p, dir)));
    }
}

impl<F: RadianceField + ?Sized> RadianceField for &F {
    fn query(&self, p: &Vec3, dir: &Vec3) -> FieldSample {
        (**self).query(p, dir)
    }

    fn query_ray(&self, positions: &[Vec3], dir: &Vec3, out: &mut Vec<FieldSample>) {
        (**self).query_ray(positions, dir, out)
    }
}

/// Wraps a field and counts point queries.
pub struct CountingField<F> {
    inner: F,
    queries: AtomicU64,
}

impl<F: RadianceField> CountingField<F> {
    pub fn new(inner: F) -> Self {
        Self {
            inner,
            queries: AtomicU64::new(0),
        }
    }

    pub fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn into_inner(self) -> F {
        self.inner
    }
}

impl<F: RadianceField> RadianceField for CountingField<F> {
    fn query(&self, p: &Vec3, dir: &Vec3) -> FieldSample {
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.inner.query(p, dir)
    }

    fn query_ray(&self, positions: &[Vec3], dir: &Vec3, out: &mut Vec<FieldSample>) {
        self.queries.fetch_add(positions.len() as u64, Ordering::Relaxed);
        self.inner.query_ray(positions, dir, out)
    }
}

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("contraction domain has zero extent")]
    DegenerateDomain,
    #[error("direction is not unit length (norm {0})")]
    NonUnitDirection(f64),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
