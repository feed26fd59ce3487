//! Deterministic synthetic scenes and camera rigs with known ground truth.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assets::{CameraPose, FocusArea, ImageBuffer};
use crate::field::{AnalyticField, Shape, Texture};
use crate::geometry::{Aabb, Vec3};
use crate::render::{render_image, RenderConfig};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FixtureError {
    #[error("invalid fixture configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    SingleOrbit,
    TwoOrbits,
    SquareRig,
    TexturedPlane,
    TwoPlanes,
    TintedSlabScene,
}

impl FixtureKind {
    pub const ALL: [FixtureKind; 6] = [
        Self::SingleOrbit,
        Self::TwoOrbits,
        Self::SquareRig,
        Self::TexturedPlane,
        Self::TwoPlanes,
        Self::TintedSlabScene,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::SingleOrbit => "single_orbit",
            Self::TwoOrbits => "two_orbits",
            Self::SquareRig => "square_rig",
            Self::TexturedPlane => "textured_plane",
            Self::TwoPlanes => "two_planes",
            Self::TintedSlabScene => "tinted_slab_scene",
        }
    }
}

impl fmt::Display for FixtureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FixtureKind {
    type Err = FixtureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = if s == "tinted_slab" { "tinted_slab_scene" } else { s };
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| FixtureError::Config(format!("unknown fixture kind {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub kind: FixtureKind,
    /// Cameras per orbit for orbit fixtures, total cameras otherwise.
    pub cameras: usize,
    pub width: u32,
    pub height: u32,
    pub seed: u64,
}

impl FixtureSpec {
    pub fn new(kind: FixtureKind) -> Self {
        let (cameras, width, height) = match kind {
            FixtureKind::SingleOrbit | FixtureKind::TwoOrbits => (30, 64, 48),
            FixtureKind::SquareRig => (16, 64, 48),
            FixtureKind::TexturedPlane => (16, 64, 64),
            FixtureKind::TwoPlanes => (12, 256, 256),
            FixtureKind::TintedSlabScene => (8, 64, 64),
        };
        Self {
            kind,
            cameras,
            width,
            height,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), FixtureError> {
        if self.width < 16 || self.height < 16 {
            return Err(FixtureError::Config(format!("resolution {}x{} is below 16x16", self.width, self.height)));
        }
        let min = match self.kind {
            FixtureKind::SingleOrbit | FixtureKind::TwoOrbits | FixtureKind::SquareRig => 4,
            _ => 1,
        };
        if self.cameras < min {
            return Err(FixtureError::Config(format!("{} needs at least {min} cameras", self.kind)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitTruth {
    pub center: [f64; 3],
    /// Camera distance from the center.
    pub orbit_radius: f64,
    /// Mean l-infinity distance from the center to the orbit's camera origins.
    pub area_radius: f64,
    pub camera_ids: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneTruth {
    pub normal: [f64; 3],
    pub offset: f64,
    pub bounds: Option<Aabb>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureMeta {
    pub kind: FixtureKind,
    pub seed: u64,
    pub orbits: Vec<OrbitTruth>,
    pub planes: Vec<PlaneTruth>,
    pub slab_tint: Option<[f64; 3]>,
    pub backing_albedo: Option<[f64; 3]>,
    pub h_shell: f64,
    /// Sampling range and count suited to the fixture.
    pub near: f64,
    pub far: f64,
    pub samples: usize,
}

impl FixtureMeta {
    pub fn areas(&self) -> Vec<FocusArea> {
        self.orbits
            .iter()
            .map(|o| FocusArea {
                members: o.camera_ids.clone(),
                ..FocusArea::new(o.center, o.area_radius)
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub spec: FixtureSpec,
    pub poses: Vec<CameraPose>,
    pub field: AnalyticField,
    pub meta: FixtureMeta,
}

/// Samples used for ground-truth images.
pub const IMAGE_SAMPLES: usize = 512;

impl Fixture {
    pub fn render_config(&self) -> RenderConfig {
        RenderConfig::new(self.meta.near, self.meta.far, self.meta.samples)
    }

    /// Ground-truth images rendered in standard mode at 512 samples.
    pub fn render_images(&self) -> Vec<ImageBuffer> {
        let cfg = RenderConfig::new(self.meta.near, self.meta.far, IMAGE_SAMPLES);
        self.poses.par_iter().map(|p| render_image(&self.field, p, &cfg).0).collect()
    }
}

fn pose(id: String, eye: Vec3, target: Vec3, fov: f64, spec: &FixtureSpec) -> CameraPose {
    CameraPose::look_at(id, eye, target, Vec3::z(), fov, spec.width, spec.height).expect("fixture poses are valid")
}

fn checker(cell: f64) -> Texture {
    Texture::Checker {
        a: [0.85, 0.8, 0.7],
        b: [0.15, 0.2, 0.3],
        cell,
    }
}

fn orbit(prefix: char, center: Vec3, radius: f64, n: usize, rng: &mut ChaCha8Rng, spec: &FixtureSpec) -> (Vec<CameraPose>, OrbitTruth) {
    let poses: Vec<CameraPose> = (0..n)
        .map(|k| {
            let az = (k as f64 + rng.random_range(-0.3..0.3)) * std::f64::consts::TAU / n as f64;
            let el = (20.0 + 20.0 * ((k % 3) as f64 / 2.0) + rng.random_range(-3.0..3.0)).to_radians();
            let eye = center + Vec3::new(az.cos() * el.cos(), az.sin() * el.cos(), el.sin()) * radius;
            pose(format!("{prefix}{k:02}"), eye, center, 50.0, spec)
        })
        .collect();
    let area_radius = poses.iter().map(|p| (p.origin - center).amax()).sum::<f64>() / n as f64;
    let truth = OrbitTruth {
        center: center.into(),
        orbit_radius: radius,
        area_radius,
        camera_ids: poses.iter().map(|p| p.id.clone()).collect(),
    };
    (poses, truth)
}

fn orbit_target(center: Vec3) -> Shape {
    Shape::Box {
        min: (center - Vec3::new(1.0, 1.0, 1.0)).into(),
        max: (center + Vec3::new(1.0, 1.0, 1.0)).into(),
        albedo: checker(0.5),
    }
}

fn ground() -> Shape {
    Shape::Plane {
        normal: [0.0, 0.0, 1.0],
        offset: -1.0,
        bounds: None,
        albedo: checker(2.0),
    }
}

fn plane_truth(shape: &Shape) -> Option<PlaneTruth> {
    match shape {
        Shape::Plane { normal, offset, bounds, .. } => Some(PlaneTruth {
            normal: *normal,
            offset: *offset,
            bounds: *bounds,
        }),
        _ => None,
    }
}

/// Builds the poses, analytic field and ground truth of a fixture. Bit-reproducible for a
/// fixed spec.
pub fn build_fixture(spec: &FixtureSpec) -> Result<Fixture, FixtureError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.cameras;
    let mut orbits = Vec::new();
    let mut poses = Vec::new();
    let mut slab_tint = None;
    let mut backing_albedo = None;
    // shell at twice the sample spacing so no ray can step over it
    let (shapes, near, far, samples) = match spec.kind {
        FixtureKind::SingleOrbit | FixtureKind::TwoOrbits => {
            let centers = if spec.kind == FixtureKind::SingleOrbit {
                vec![Vec3::zeros()]
            } else {
                vec![Vec3::new(-20.0, 0.0, 0.0), Vec3::new(20.0, 0.0, 0.0)]
            };
            let mut shapes = vec![ground()];
            for (i, c) in centers.iter().enumerate() {
                let (p, t) = orbit((b'a' + i as u8) as char, *c, 5.0, n, &mut rng, spec);
                poses.extend(p);
                orbits.push(t);
                shapes.push(orbit_target(*c));
            }
            (shapes, 0.5, 60.0, 512)
        }
        FixtureKind::SquareRig => {
            // cameras spread along the outline of a 10 m square, all facing its center
            let half = 5.0;
            for k in 0..n {
                let s = 8.0 * half * k as f64 / n as f64;
                let side = (s / (2.0 * half)) as usize;
                let u = s - side as f64 * 2.0 * half - half;
                let (x, y) = match side {
                    0 => (u, -half),
                    1 => (half, u),
                    2 => (-u, half),
                    _ => (-half, -u),
                };
                poses.push(pose(format!("s{k:02}"), Vec3::new(x, y, 3.0), Vec3::zeros(), 60.0, spec));
            }
            orbits.push({
                let area_radius = poses.iter().map(|p| p.origin.amax()).sum::<f64>() / n as f64;
                OrbitTruth {
                    center: [0.0; 3],
                    orbit_radius: (half * half + 9.0f64).sqrt(),
                    area_radius,
                    camera_ids: poses.iter().map(|p| p.id.clone()).collect(),
                }
            });
            (vec![ground(), orbit_target(Vec3::zeros())], 0.5, 20.0, 512)
        }
        FixtureKind::TexturedPlane => {
            // cameras 3 m above a checkerboard, tilted toward the middle
            let side = (n as f64).sqrt().ceil() as usize;
            for k in 0..n {
                let (i, j) = ((k % side) as f64, (k / side) as f64);
                let span = (side.max(2) - 1) as f64;
                let x = -1.5 + 3.0 * i / span + rng.random_range(-0.1..0.1);
                let y = -1.5 + 3.0 * j / span + rng.random_range(-0.1..0.1);
                let eye = Vec3::new(x, y, 3.0);
                let target = Vec3::new(0.3 * x, 0.3 * y, 0.0);
                poses.push(pose(format!("p{k:02}"), eye, target, 60.0, spec));
            }
            let plane = Shape::Plane {
                normal: [0.0, 0.0, 1.0],
                offset: 0.0,
                bounds: None,
                // both colors bright so a transparent field cannot explain either one
                albedo: Texture::Checker {
                    a: [0.95, 0.9, 0.8],
                    b: [0.45, 0.6, 0.85],
                    cell: 1.0,
                },
            };
            (vec![plane], 1.0, 6.0, 1024)
        }
        FixtureKind::TwoPlanes => {
            // a small plate 1 m above a larger one, seen from 5 m; most rays miss both
            for k in 0..n {
                let a = k as f64 * std::f64::consts::TAU / n as f64;
                let r = 0.5 + 0.3 * (k % 2) as f64;
                let eye = Vec3::new(r * a.cos(), r * a.sin(), 5.0);
                poses.push(pose(format!("t{k:02}"), eye, Vec3::zeros(), 30.0, spec));
            }
            let far_plate = Shape::Plane {
                normal: [0.0, 0.0, 1.0],
                offset: 0.0,
                bounds: Some(Aabb::new([-0.7, -0.7, -1.0], [0.7, 0.7, 1.0])),
                albedo: checker(0.35),
            };
            let near_plate = Shape::Plane {
                normal: [0.0, 0.0, 1.0],
                offset: 1.0,
                bounds: Some(Aabb::new([-0.3, -0.3, 0.0], [0.3, 0.3, 2.0])),
                albedo: Texture::constant([0.8, 0.3, 0.2]),
            };
            // fog under the near plate's outline, narrower than one pixel footprint
            let skirt = Shape::Skirt {
                rect: [-0.3, -0.3, 0.3, 0.3],
                top: 1.0,
                depth: 0.5,
                width: 0.006,
                peak: 200.0,
                color: [0.5, 0.5, 0.5],
            };
            (vec![far_plate, near_plate, skirt], 3.0, 6.5, 1024)
        }
        FixtureKind::TintedSlabScene => {
            for k in 0..n {
                let a = k as f64 * std::f64::consts::TAU / n as f64;
                let eye = Vec3::new(0.3 * a.cos(), 0.3 * a.sin(), 2.5);
                poses.push(pose(format!("w{k:02}"), eye, Vec3::zeros(), 30.0, spec));
            }
            let tint = [1.0, 1.0, 0.0];
            let backing = [1.0, 1.0, 1.0];
            slab_tint = Some(tint);
            backing_albedo = Some(backing);
            // a vertical pass through the slab keeps 70% of the light: -ln(0.7) over 0.1 m
            let thickness = 0.1;
            let density = -(0.7f64).ln() / thickness;
            let shapes = vec![
                Shape::Plane {
                    normal: [0.0, 0.0, 1.0],
                    offset: 0.0,
                    bounds: None,
                    albedo: Texture::constant(backing),
                },
                Shape::Slab {
                    normal: [0.0, 0.0, 1.0],
                    start: 1.0,
                    thickness,
                    density,
                    tint,
                },
            ];
            (shapes, 0.5, 3.5, 512)
        }
    };
    let spacing = (far - near) / samples as f64;
    let h_shell = 2.0 * spacing;
    let field = AnalyticField::new(shapes, h_shell, 1e4);
    let planes = field.shapes.iter().filter_map(plane_truth).collect();
    Ok(Fixture {
        spec: spec.clone(),
        poses,
        meta: FixtureMeta {
            kind: spec.kind,
            seed: spec.seed,
            orbits,
            planes,
            slab_tint,
            backing_albedo,
            h_shell,
            near,
            far,
            samples,
        },
        field,
    })
}

/// Nadir 64x64 camera 3 m above the textured plane, used to probe reconstructed depth.
pub fn plane_probe_pose() -> CameraPose {
    CameraPose::look_at("probe", Vec3::new(0.0, 0.0, 3.0), Vec3::zeros(), Vec3::y(), 50.0, 64, 64).expect("valid probe")
}
