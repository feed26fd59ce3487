//! Analytic scenes with known geometry, used as oracles.
//!
//! Opaque surfaces are thin shells of thickness `h_shell` filled with density
//! `sigma_opaque`, so that volume rendering converges to the surface. Overlapping
//! shapes add their densities and mix colors in proportion to density.

use serde::{Deserialize, Serialize};

use super::{FieldSample, RadianceField};
use crate::geometry::{Aabb, Ray, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Texture {
    Constant { rgb: [f64; 3] },
    /// Alternating squares of side `cell` in the plane's tangent coordinates.
    Checker { a: [f64; 3], b: [f64; 3], cell: f64 },
}

impl Texture {
    pub fn constant(rgb: [f64; 3]) -> Self {
        Self::Constant { rgb }
    }

    fn eval(&self, u: f64, v: f64) -> [f64; 3] {
        match self {
            Texture::Constant { rgb } => *rgb,
            Texture::Checker { a, b, cell } => {
                let parity = ((u / cell).floor() as i64 + (v / cell).floor() as i64).rem_euclid(2);
                if parity == 0 {
                    *a
                } else {
                    *b
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Opaque plane `normal . p = offset`, optionally clipped to `bounds`.
    Plane {
        normal: [f64; 3],
        offset: f64,
        #[serde(default)]
        bounds: Option<Aabb>,
        albedo: Texture,
    },
    Sphere {
        center: [f64; 3],
        radius: f64,
        albedo: Texture,
    },
    Box {
        min: [f64; 3],
        max: [f64; 3],
        albedo: Texture,
    },
    /// Translucent layer `start <= normal . p <= start + thickness` of constant density.
    Slab {
        normal: [f64; 3],
        start: f64,
        thickness: f64,
        density: f64,
        tint: [f64; 3],
    },
    /// Fog hanging below the outline of the horizontal rectangle `rect` (`x0, y0, x1, y1`)
    /// at height `top`: for `top - depth <= z <= top` and lateral distance `0 < s <= width`
    /// from the rectangle, density `peak * (1 - s / width)`.
    Skirt {
        rect: [f64; 4],
        top: f64,
        depth: f64,
        width: f64,
        peak: f64,
        color: [f64; 3],
    },
}

fn unit(v: [f64; 3]) -> Vec3 {
    Vec3::from(v).normalize()
}

fn tangent_basis(n: &Vec3) -> (Vec3, Vec3) {
    // near-horizontal planes keep world x/y as tangent axes
    let a = if n.z.abs() >= 0.9 {
        Vec3::x() - n * n.x
    } else {
        Vec3::z().cross(n)
    }
    .normalize();
    (a, n.cross(&a))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticField {
    pub shapes: Vec<Shape>,
    pub h_shell: f64,
    pub sigma_opaque: f64,
}

impl AnalyticField {
    /// Shell parameters derived from a scene scale: `h = 1e-3 s`, `sigma = 1e4 / s`.
    pub fn with_scale(shapes: Vec<Shape>, scene_scale: f64) -> Self {
        Self {
            shapes,
            h_shell: 1e-3 * scene_scale,
            sigma_opaque: 1e4 / scene_scale,
        }
    }

    pub fn new(shapes: Vec<Shape>, h_shell: f64, sigma_opaque: f64) -> Self {
        Self {
            shapes,
            h_shell,
            sigma_opaque,
        }
    }

    fn shape_sample(&self, shape: &Shape, p: &Vec3) -> Option<(f64, [f64; 3])> {
        let h = self.h_shell;
        match shape {
            Shape::Plane {
                normal,
                offset,
                bounds,
                albedo,
            } => {
                let n = unit(*normal);
                if (n.dot(p) - offset).abs() > 0.5 * h {
                    return None;
                }
                if let Some(b) = bounds {
                    if !(0..3).all(|k| p[k] >= b.min[k] - 0.5 * h && p[k] <= b.max[k] + 0.5 * h) {
                        return None;
                    }
                }
                let (ta, tb) = tangent_basis(&n);
                Some((self.sigma_opaque, albedo.eval(ta.dot(p), tb.dot(p))))
            }
            Shape::Sphere {
                center,
                radius,
                albedo,
            } => {
                let q = p - Vec3::from(*center);
                let r = q.norm();
                if r > *radius || r < radius - h {
                    return None;
                }
                let n = if r > 0.0 { q / r } else { Vec3::z() };
                Some((self.sigma_opaque, albedo.eval(n.x.atan2(n.y) * radius, n.z * radius)))
            }
            Shape::Box { min, max, albedo } => {
                let inside = (0..3).all(|k| p[k] >= min[k] && p[k] <= max[k]);
                if !inside {
                    return None;
                }
                let depth = (0..3)
                    .map(|k| (p[k] - min[k]).min(max[k] - p[k]))
                    .fold(f64::INFINITY, f64::min);
                if depth > h {
                    return None;
                }
                Some((self.sigma_opaque, albedo.eval(p.x + p.z, p.y)))
            }
            Shape::Slab {
                normal,
                start,
                thickness,
                density,
                tint,
            } => {
                let s = unit(*normal).dot(p) - start;
                (s >= 0.0 && s <= *thickness).then_some((*density, *tint))
            }
            Shape::Skirt {
                rect,
                top,
                depth,
                width,
                peak,
                color,
            } => {
                if p.z > *top || p.z < top - depth {
                    return None;
                }
                let dx = (rect[0] - p.x).max(p.x - rect[2]).max(0.0);
                let dy = (rect[1] - p.y).max(p.y - rect[3]).max(0.0);
                let s = dx.hypot(dy);
                (s > 0.0 && s <= *width).then(|| (peak * (1.0 - s / width), *color))
            }
        }
    }

    /// First analytic surface hit along a ray: distance to the nearest opaque surface
    /// (plane mid-surface, sphere or box boundary) and its albedo. Translucent shapes
    /// are ignored.
    pub fn first_surface(&self, ray: &Ray) -> Option<(f64, [f64; 3])> {
        let mut best: Option<(f64, [f64; 3])> = None;
        let mut consider = |t: f64, rgb: [f64; 3]| {
            if t > 0.0 && best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, rgb));
            }
        };
        for shape in &self.shapes {
            match shape {
                Shape::Plane {
                    normal,
                    offset,
                    bounds,
                    albedo,
                } => {
                    let n = unit(*normal);
                    let denom = n.dot(&ray.direction);
                    if denom.abs() < 1e-15 {
                        continue;
                    }
                    let t = (offset - n.dot(&ray.origin)) / denom;
                    let p = ray.at(t);
                    if bounds.is_none_or(|b| (0..3).all(|k| p[k] >= b.min[k] - 1e-9 && p[k] <= b.max[k] + 1e-9)) {
                        let (ta, tb) = tangent_basis(&n);
                        consider(t, albedo.eval(ta.dot(&p), tb.dot(&p)));
                    }
                }
                Shape::Sphere {
                    center,
                    radius,
                    albedo,
                } => {
                    let oc = ray.origin - Vec3::from(*center);
                    let b = oc.dot(&ray.direction);
                    let disc = b * b - (oc.norm_squared() - radius * radius);
                    if disc >= 0.0 {
                        let t = -b - disc.sqrt();
                        let p = ray.at(t);
                        let n = (p - Vec3::from(*center)) / *radius;
                        consider(t, albedo.eval(n.x.atan2(n.y) * radius, n.z * radius));
                    }
                }
                Shape::Box { min, max, albedo } => {
                    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
                    for k in 0..3 {
                        let inv = 1.0 / ray.direction[k];
                        let (a, b) = ((min[k] - ray.origin[k]) * inv, (max[k] - ray.origin[k]) * inv);
                        t0 = t0.max(a.min(b));
                        t1 = t1.min(a.max(b));
                    }
                    if t0 <= t1 {
                        let p = ray.at(t0);
                        consider(t0, albedo.eval(p.x + p.z, p.y));
                    }
                }
                Shape::Slab { .. } | Shape::Skirt { .. } => {}
            }
        }
        best
    }
}

impl RadianceField for AnalyticField {
    fn query(&self, p: &Vec3, _dir: &Vec3) -> FieldSample {
        let mut density = 0.0;
        let mut acc = [0.0; 3];
        for shape in &self.shapes {
            if let Some((s, c)) = self.shape_sample(shape, p) {
                density += s;
                for k in 0..3 {
                    acc[k] += s * c[k];
                }
            }
        }
        if density <= 0.0 {
            return FieldSample::EMPTY;
        }
        FieldSample {
            density,
            color: acc.map(|a| (a / density).clamp(0.0, 1.0)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(z: f64, rgb: [f64; 3]) -> Shape {
        Shape::Plane {
            normal: [0.0, 0.0, 1.0],
            offset: z,
            bounds: None,
            albedo: Texture::constant(rgb),
        }
    }

    #[test]
    fn plane_shell_is_dense_only_near_surface() {
        let f = AnalyticField::new(vec![plane(3.0, [0.2, 0.4, 0.6])], 0.01, 1e4);
        let d = Vec3::z();
        assert_eq!(f.query(&Vec3::new(0.0, 0.0, 3.004), &d).density, 1e4);
        assert_eq!(f.query(&Vec3::new(5.0, 1.0, 2.996), &d).color, [0.2, 0.4, 0.6]);
        assert_eq!(f.query(&Vec3::new(0.0, 0.0, 3.006), &d), FieldSample::EMPTY);
    }

    #[test]
    fn checker_alternates_along_x() {
        let f = AnalyticField::new(
            vec![Shape::Plane {
                normal: [0.0, 0.0, 1.0],
                offset: 0.0,
                bounds: None,
                albedo: Texture::Checker {
                    a: [0.0; 3],
                    b: [1.0; 3],
                    cell: 1.0,
                },
            }],
            0.01,
            1e3,
        );
        let d = Vec3::z();
        let c0 = f.query(&Vec3::new(0.5, 0.5, 0.0), &d).color;
        let c1 = f.query(&Vec3::new(1.5, 0.5, 0.0), &d).color;
        assert_ne!(c0, c1);
        assert_eq!(c0, f.query(&Vec3::new(1.5, 1.5, 0.004), &d).color);
    }

    #[test]
    fn first_surface_finds_nearest_opaque_shape() {
        let f = AnalyticField::new(
            vec![
                plane(0.0, [1.0; 3]),
                Shape::Sphere {
                    center: [0.0, 0.0, 2.0],
                    radius: 1.0,
                    albedo: Texture::constant([1.0, 0.0, 0.0]),
                },
            ],
            0.01,
            1e3,
        );
        let ray = Ray::new(Vec3::new(0.0, 0.0, 10.0), -Vec3::z());
        let (t, c) = f.first_surface(&ray).unwrap();
        assert!((t - 7.0).abs() < 1e-12);
        assert_eq!(c, [1.0, 0.0, 0.0]);
        let miss = Ray::new(Vec3::new(5.0, 0.0, 10.0), -Vec3::z());
        assert!((f.first_surface(&miss).unwrap().0 - 10.0).abs() < 1e-12);
    }

    #[test]
    fn skirt_density_falls_off_laterally() {
        let f = AnalyticField::new(
            vec![Shape::Skirt {
                rect: [-1.0, -1.0, 1.0, 1.0],
                top: 0.0,
                depth: 1.0,
                width: 0.2,
                peak: 50.0,
                color: [0.5; 3],
            }],
            0.01,
            1e3,
        );
        let d = Vec3::z();
        assert_eq!(f.query(&Vec3::new(0.0, 0.0, -0.5), &d).density, 0.0);
        assert!((f.query(&Vec3::new(1.1, 0.0, -0.5), &d).density - 25.0).abs() < 1e-9);
        assert_eq!(f.query(&Vec3::new(1.3, 0.0, -0.5), &d).density, 0.0);
        assert_eq!(f.query(&Vec3::new(1.1, 0.0, 0.1), &d).density, 0.0);
    }

    #[test]
    fn serde_round_trip() {
        let f = AnalyticField::with_scale(vec![plane(1.0, [0.5; 3])], 10.0);
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(serde_json::from_str::<AnalyticField>(&s).unwrap(), f);
    }
}
