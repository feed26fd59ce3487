//! Camera poses: pinhole intrinsics plus a world-from-camera rotation.
//!
//! Camera frame convention: +X right, +Y up, optical axis along -Z. Pixel rows
//! grow downwards, so image `v` maps to camera `-Y`.

use std::fs;
use std::path::Path;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use super::AssetError;
use crate::geometry::{Mat3, Ray, Vec3};

/// Rotations further than this from orthonormal are rejected instead of repaired.
pub const ORTHONORMAL_REPAIR_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct CameraPose {
    pub id: String,
    pub origin: Vec3,
    /// World-from-camera rotation.
    pub rotation: Mat3,
    pub viewing_direction: Vec3,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoseFormat {
    TransformsJson,
    PoseCsv,
}

impl std::str::FromStr for PoseFormat {
    type Err = AssetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "transforms_json" | "json" => Ok(Self::TransformsJson),
            "pose_csv" | "csv" => Ok(Self::PoseCsv),
            other => Err(AssetError::Parse(format!("unknown pose format {other:?}"))),
        }
    }
}

impl PoseFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Self::PoseCsv,
            _ => Self::TransformsJson,
        }
    }
}

impl CameraPose {
    /// Builds a pose, repairing rotations within [`ORTHONORMAL_REPAIR_TOL`] of orthonormal.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: impl Into<String>,
        origin: Vec3,
        rotation: Mat3,
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
    ) -> Result<Self, AssetError> {
        let id = id.into();
        let invalid = |reason: String| AssetError::InvalidPose {
            id: id.clone(),
            reason,
        };
        if !(fx > 0.0 && fy > 0.0) || !fx.is_finite() || !fy.is_finite() {
            return Err(invalid(format!("focal lengths must be positive, got ({fx}, {fy})")));
        }
        if width == 0 || height == 0 {
            return Err(invalid("image size must be positive".into()));
        }
        if !origin.iter().all(|v| v.is_finite()) || !rotation.iter().all(|v| v.is_finite()) {
            return Err(invalid("non-finite extrinsics".into()));
        }
        let rotation = orthonormalize(&rotation).map_err(invalid)?;
        let viewing_direction = (rotation * Vec3::new(0.0, 0.0, -1.0)).normalize();
        Ok(Self {
            id,
            origin,
            rotation,
            viewing_direction,
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }

    /// Camera at `eye` looking at `target` with a symmetric pinhole of the given horizontal
    /// field of view.
    pub fn look_at(
        id: impl Into<String>,
        eye: Vec3,
        target: Vec3,
        up: Vec3,
        fov_x_deg: f64,
        width: u32,
        height: u32,
    ) -> Result<Self, AssetError> {
        let rotation = crate::geometry::look_at_rotation(&eye, &target, &up);
        let f = 0.5 * width as f64 / (0.5 * fov_x_deg.to_radians()).tan();
        Self::new(
            id,
            eye,
            rotation,
            f,
            f,
            0.5 * width as f64,
            0.5 * height as f64,
            width,
            height,
        )
    }

    /// Ray through continuous pixel coordinates (`(0,0)` is the top-left image corner,
    /// pixel centers sit at half-integers).
    pub fn pixel_ray(&self, px: f64, py: f64) -> Result<Ray, AssetError> {
        if !(px >= 0.0 && py >= 0.0 && px <= self.width as f64 && py <= self.height as f64) {
            return Err(AssetError::OutOfBounds { x: px, y: py });
        }
        Ok(self.pixel_ray_unchecked(px, py))
    }

    #[inline]
    pub fn pixel_ray_unchecked(&self, px: f64, py: f64) -> Ray {
        let cam = Vec3::new((px - self.cx) / self.fx, -(py - self.cy) / self.fy, -1.0);
        Ray::new(self.origin, (self.rotation * cam).normalize())
    }

    /// Ray through the center of integer pixel `(x, y)`.
    #[inline]
    pub fn pixel_center_ray(&self, x: u32, y: u32) -> Ray {
        self.pixel_ray_unchecked(x as f64 + 0.5, y as f64 + 0.5)
    }

    /// 4x4 camera-to-world matrix.
    pub fn camera_to_world(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.origin);
        m
    }
}

fn orthonormalize(r: &Mat3) -> Result<Mat3, String> {
    let defect = (r * r.transpose() - Mat3::identity()).abs().max();
    if defect > ORTHONORMAL_REPAIR_TOL {
        return Err(format!("rotation is {defect:.3e} away from orthonormal"));
    }
    if r.determinant() <= 0.0 {
        return Err("rotation is a reflection".into());
    }
    if defect == 0.0 {
        return Ok(*r);
    }
    let svd = r.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    Ok(u * v_t)
}

#[derive(Serialize, Deserialize)]
struct TransformsFile {
    fl_x: f64,
    fl_y: f64,
    cx: f64,
    cy: f64,
    w: u32,
    h: u32,
    frames: Vec<TransformsFrame>,
}

#[derive(Serialize, Deserialize)]
struct TransformsFrame {
    file_path: String,
    transform_matrix: [[f64; 4]; 4],
}

pub fn load_poses(path: &Path, format: PoseFormat) -> Result<Vec<CameraPose>, AssetError> {
    let text = fs::read_to_string(path)?;
    let poses = match format {
        PoseFormat::TransformsJson => parse_transforms_json(&text)?,
        PoseFormat::PoseCsv => parse_pose_csv(&text)?,
    };
    if poses.is_empty() {
        return Err(AssetError::EmptySet);
    }
    Ok(poses)
}

pub fn parse_transforms_json(text: &str) -> Result<Vec<CameraPose>, AssetError> {
    let file: TransformsFile =
        serde_json::from_str(text).map_err(|e| AssetError::Parse(e.to_string()))?;
    file.frames
        .iter()
        .map(|frame| {
            let m = &frame.transform_matrix;
            let rotation = Mat3::new(
                m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
            );
            let origin = Vec3::new(m[0][3], m[1][3], m[2][3]);
            CameraPose::new(
                frame.file_path.clone(),
                origin,
                rotation,
                file.fl_x,
                file.fl_y,
                file.cx,
                file.cy,
                file.w,
                file.h,
            )
        })
        .collect()
}

/// Serializes poses sharing one set of intrinsics (taken from the first pose).
pub fn transforms_json_string(poses: &[CameraPose]) -> Result<String, AssetError> {
    let first = poses.first().ok_or(AssetError::EmptySet)?;
    let frames = poses
        .iter()
        .map(|p| {
            let m = p.camera_to_world();
            let mut rows = [[0.0; 4]; 4];
            for (r, row) in rows.iter_mut().enumerate() {
                for (c, v) in row.iter_mut().enumerate() {
                    *v = m[(r, c)];
                }
            }
            TransformsFrame {
                file_path: p.id.clone(),
                transform_matrix: rows,
            }
        })
        .collect();
    let file = TransformsFile {
        fl_x: first.fx,
        fl_y: first.fy,
        cx: first.cx,
        cy: first.cy,
        w: first.width,
        h: first.height,
        frames,
    };
    serde_json::to_string_pretty(&file).map_err(|e| AssetError::Parse(e.to_string()))
}

/// One pose per line: `id, ox, oy, oz, r00..r22 (row-major), fx, fy, cx, cy, w, h`.
/// Blank lines and `#` comments are skipped.
pub fn parse_pose_csv(text: &str) -> Result<Vec<CameraPose>, AssetError> {
    let mut poses = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 19 {
            return Err(AssetError::Parse(format!(
                "line {}: expected 19 fields, found {}",
                lineno + 1,
                fields.len()
            )));
        }
        let nums: Vec<f64> = fields[1..17]
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| AssetError::Parse(format!("line {}: {e}", lineno + 1)))?;
        let dims: Vec<u32> = fields[17..19]
            .iter()
            .map(|s| s.parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|e| AssetError::Parse(format!("line {}: {e}", lineno + 1)))?;
        let origin = Vec3::new(nums[0], nums[1], nums[2]);
        let rotation = Mat3::from_row_slice(&nums[3..12]);
        poses.push(CameraPose::new(
            fields[0], origin, rotation, nums[12], nums[13], nums[14], nums[15], dims[0], dims[1],
        )?);
    }
    Ok(poses)
}

pub fn pose_csv_string(poses: &[CameraPose]) -> String {
    let mut out = String::new();
    for p in poses {
        let r = &p.rotation;
        let vals: Vec<String> = [p.origin.x, p.origin.y, p.origin.z]
            .into_iter()
            .chain((0..3).flat_map(|i| (0..3).map(move |j| r[(i, j)])))
            .chain([p.fx, p.fy, p.cx, p.cy])
            .map(|v| format!("{v:?}"))
            .collect();
        out.push_str(&format!("{},{},{},{}\n", p.id, vals.join(","), p.width, p.height));
    }
    out
}
