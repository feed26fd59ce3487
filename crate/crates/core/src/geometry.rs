//! Small geometric vocabulary shared by every module.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// A half-line `origin + t * direction`, `direction` of unit length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Ray {
    pub fn new(origin: Vec3, direction: Vec3) -> Self {
        Self { origin, direction }
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

/// Axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = Self::new([first.x, first.y, first.z], [first.x, first.y, first.z]);
        for p in it {
            for k in 0..3 {
                b.min[k] = b.min[k].min(p[k]);
                b.max[k] = b.max[k].max(p[k]);
            }
        }
        Some(b)
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    pub fn center(&self) -> Vec3 {
        Vec3::new(
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
            0.5 * (self.min[2] + self.max[2]),
        )
    }

    pub fn diagonal(&self) -> f64 {
        (0..3)
            .map(|k| (self.max[k] - self.min[k]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Parses `"x0,y0,z0,x1,y1,z1"`.
    pub fn parse(text: &str) -> Option<Self> {
        let v: Vec<f64> = text
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .ok()?;
        if v.len() != 6 || (0..3).any(|k| !(v[k] <= v[k + 3])) {
            return None;
        }
        Some(Self::new([v[0], v[1], v[2]], [v[3], v[4], v[5]]))
    }
}

/// World-from-camera rotation for a camera at `eye` looking at `target`, optical axis -Z,
/// camera +Y as close to `up` as possible.
pub fn look_at_rotation(eye: &Vec3, target: &Vec3, up: &Vec3) -> Mat3 {
    let forward = (target - eye).normalize();
    let mut right = forward.cross(up);
    if right.norm() < 1e-9 {
        // looking along `up`; pick any perpendicular
        let alt = if forward.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        right = forward.cross(&alt);
    }
    let right = right.normalize();
    let cam_up = right.cross(&forward);
    Mat3::from_columns(&[right, cam_up, -forward])
}
