//! Camera poses, images, point clouds and focus-area files.

pub mod areas;
pub mod image;
pub mod ply;
pub mod pose;

use thiserror::Error;

pub use areas::{read_focus_areas, write_focus_areas, FocusArea};
pub use image::{load_image, write_pgm, write_png, ImageBuffer};
pub use ply::{read_ply, write_ply, CloudPoint, PointCloud};
pub use pose::{load_poses, CameraPose, PoseFormat};

#[derive(Debug, Error)]
pub enum AssetError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid pose {id:?}: {reason}")]
    InvalidPose { id: String, reason: String },
    #[error("file contains no poses")]
    EmptySet,
    #[error("pixel ({x}, {y}) is outside the image")]
    OutOfBounds { x: f64, y: f64 },
    #[error("image error: {0}")]
    Image(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
