//! Point-cloud extraction: random pixels are rendered to depth, back-projected, and kept
//! only when the surrounding patch shows no nearer surface (surrounding-depth check).
//!
//! The two-step variant renders the patch neighbors only for candidates that survive the
//! center-ray checks; the naive variant renders every patch ray up front. Both apply the
//! same decisions in the same order and produce identical clouds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assets::{CameraPose, PointCloud};
use crate::field::RadianceField;
use crate::geometry::Aabb;
use crate::render::{render_pixel, render_ray_depth, RayRender, RenderConfig, RenderStatus};

#[derive(Debug, thiserror::Error)]
pub enum ExtractionError {
    #[error("invalid extraction configuration: {0}")]
    Config(String),
    #[error("gave up after {} attempts with {} of {target} points", .partial.stats.attempted, .partial.cloud.len())]
    Exhausted { target: usize, partial: Box<Extraction> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractionConfig {
    pub target_points: usize,
    pub patch_w: u32,
    pub patch_h: u32,
    /// Relative depth slack of the surrounding-depth check; `None` disables the check.
    pub eps3: Option<f64>,
    pub bounds: Option<Aabb>,
    pub seed: u64,
    pub render: RenderConfig,
    pub max_attempts: usize,
    pub batch: usize,
}

impl ExtractionConfig {
    pub fn new(target_points: usize, render: RenderConfig) -> Self {
        Self {
            target_points,
            patch_w: 3,
            patch_h: 3,
            eps3: Some(0.0025),
            bounds: None,
            seed: 0,
            render,
            max_attempts: (50 * target_points).max(100_000),
            batch: 4096,
        }
    }

    pub fn validate(&self) -> Result<(), ExtractionError> {
        let bad = |m: String| Err(ExtractionError::Config(m));
        if self.patch_w % 2 == 0 || self.patch_h % 2 == 0 {
            return bad(format!("patch {}x{} must have odd sides", self.patch_w, self.patch_h));
        }
        if let Some(e) = self.eps3 {
            if !(e > 0.0 && e < 1.0) {
                return bad(format!("eps3 must lie in (0, 1), got {e}"));
            }
        }
        if self.batch == 0 {
            return bad("batch size must be positive".into());
        }
        self.render.validate().map_err(|e| ExtractionError::Config(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionCounts {
    pub infinite_depth: u64,
    pub empty_csd_window: u64,
    pub out_of_bounds: u64,
    pub sdd: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionStats {
    pub attempted: u64,
    pub rejected_by: RejectionCounts,
    pub accepted: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    pub cloud: PointCloud,
    pub stats: ExtractionStats,
}

/// Keeps the center unless some patch ray saw a surface clearly in front of it:
/// accept iff `(1 - eps3) d_center <= min(patch)`. Infinite patch depths never reject.
pub fn sdd_accept(d_center: f64, patch_depths: &[f64], eps3: f64) -> bool {
    let d_min = patch_depths.iter().copied().fold(f64::INFINITY, f64::min);
    (1.0 - eps3) * d_center <= d_min
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    TwoStep,
    Naive,
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    image: usize,
    x: u32,
    y: u32,
}

enum Verdict {
    Accept([f64; 3], [f64; 3]),
    Infinite,
    EmptyWindow,
    OutOfBounds,
    Sdd,
}

fn valid_images(poses: &[CameraPose], cfg: &ExtractionConfig) -> Result<(), ExtractionError> {
    for p in poses {
        if p.width < cfg.patch_w || p.height < cfg.patch_h {
            return Err(ExtractionError::Config(format!(
                "patch {}x{} does not fit image {} ({}x{})",
                cfg.patch_w, cfg.patch_h, p.id, p.width, p.height
            )));
        }
    }
    Ok(())
}

fn draw(rng: &mut ChaCha8Rng, poses: &[CameraPose], hw: u32, hh: u32) -> Candidate {
    let image = rng.random_range(0..poses.len());
    let p = &poses[image];
    Candidate {
        image,
        x: rng.random_range(hw..p.width - hw),
        y: rng.random_range(hh..p.height - hh),
    }
}

fn patch_depths(field: &(impl RadianceField + ?Sized), pose: &CameraPose, c: Candidate, hw: u32, hh: u32, render: &RenderConfig) -> Vec<f64> {
    let mut out = Vec::with_capacity(((2 * hw + 1) * (2 * hh + 1)) as usize);
    for y in c.y - hh..=c.y + hh {
        for x in c.x - hw..=c.x + hw {
            if (x, y) != (c.x, c.y) {
                out.push(render_ray_depth(field, &pose.pixel_center_ray(x, y), render));
            }
        }
    }
    out
}

struct Center {
    point: [f64; 3],
    color: [f64; 3],
    depth: f64,
}

/// Center-ray checks in the fixed order infinite depth, empty window, bounds.
fn center_checks(r: RayRender, pose: &CameraPose, c: Candidate, bounds: Option<&Aabb>) -> Result<Center, Verdict> {
    match r.status {
        RenderStatus::RejectedInfiniteDepth => return Err(Verdict::Infinite),
        RenderStatus::RejectedEmptyWindow => return Err(Verdict::EmptyWindow),
        RenderStatus::Accepted => {}
    }
    let p = pose.pixel_center_ray(c.x, c.y).at(r.depth);
    if bounds.is_some_and(|b| !b.contains(&p)) {
        return Err(Verdict::OutOfBounds);
    }
    Ok(Center {
        point: p.into(),
        color: r.color,
        depth: r.depth,
    })
}

fn surrounding_check(center: Center, depths: &[f64], eps3: Option<f64>) -> Verdict {
    match eps3 {
        Some(e) if !sdd_accept(center.depth, depths, e) => Verdict::Sdd,
        _ => Verdict::Accept(center.point, center.color),
    }
}

fn verdicts(
    field: &(impl RadianceField + ?Sized),
    poses: &[CameraPose],
    batch: &[Candidate],
    cfg: &ExtractionConfig,
    mode: Mode,
) -> Vec<Verdict> {
    let (hw, hh) = (cfg.patch_w / 2, cfg.patch_h / 2);
    let render = &cfg.render;
    let center = |c: Candidate| {
        let pose = &poses[c.image];
        let r = render_pixel(field, &pose.pixel_center_ray(c.x, c.y), render);
        center_checks(r, pose, c, cfg.bounds.as_ref())
    };
    match mode {
        Mode::TwoStep => {
            let first: Vec<Result<Center, Verdict>> = batch.par_iter().map(|&c| center(c)).collect();
            first
                .into_par_iter()
                .zip(batch.par_iter())
                .map(|(v, &c)| match v {
                    Err(v) => v,
                    Ok(ctr) if cfg.eps3.is_none() => surrounding_check(ctr, &[], None),
                    Ok(ctr) => {
                        let depths = patch_depths(field, &poses[c.image], c, hw, hh, render);
                        surrounding_check(ctr, &depths, cfg.eps3)
                    }
                })
                .collect()
        }
        Mode::Naive => batch
            .par_iter()
            .map(|&c| {
                let depths = patch_depths(field, &poses[c.image], c, hw, hh, render);
                match center(c) {
                    Err(v) => v,
                    Ok(ctr) => surrounding_check(ctr, &depths, cfg.eps3),
                }
            })
            .collect(),
    }
}

/// Extracts `cfg.target_points` points. Deterministic for a fixed seed; candidates are
/// drawn in batches and their outcomes are applied in draw order.
pub fn extract_with_mode(
    field: &(impl RadianceField + ?Sized),
    poses: &[CameraPose],
    cfg: &ExtractionConfig,
    mode: Mode,
) -> Result<Extraction, ExtractionError> {
    cfg.validate()?;
    if poses.is_empty() {
        return Err(ExtractionError::Config("no camera poses".into()));
    }
    valid_images(poses, cfg)?;
    let (hw, hh) = (cfg.patch_w / 2, cfg.patch_h / 2);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Extraction {
        cloud: PointCloud::default(),
        stats: ExtractionStats::default(),
    };
    let target = cfg.target_points;
    while out.cloud.len() < target && (out.stats.attempted as usize) < cfg.max_attempts {
        let n = cfg.batch.min(cfg.max_attempts - out.stats.attempted as usize);
        let batch: Vec<Candidate> = (0..n).map(|_| draw(&mut rng, poses, hw, hh)).collect();
        for v in verdicts(field, poses, &batch, cfg, mode) {
            if out.cloud.len() == target {
                break;
            }
            out.stats.attempted += 1;
            let r = &mut out.stats.rejected_by;
            match v {
                Verdict::Accept(p, c) => {
                    out.cloud.push(p, c);
                    out.stats.accepted += 1;
                }
                Verdict::Infinite => r.infinite_depth += 1,
                Verdict::EmptyWindow => r.empty_csd_window += 1,
                Verdict::OutOfBounds => r.out_of_bounds += 1,
                Verdict::Sdd => r.sdd += 1,
            }
        }
    }
    if out.cloud.len() < target {
        return Err(ExtractionError::Exhausted {
            target,
            partial: Box::new(out),
        });
    }
    Ok(out)
}

/// Two-step extraction: patch neighbors are rendered only for surviving centers.
pub fn extract_point_cloud(field: &(impl RadianceField + ?Sized), poses: &[CameraPose], cfg: &ExtractionConfig) -> Result<Extraction, ExtractionError> {
    extract_with_mode(field, poses, cfg, Mode::TwoStep)
}

/// Renders every patch ray of every candidate before filtering.
pub fn extract_naive(field: &(impl RadianceField + ?Sized), poses: &[CameraPose], cfg: &ExtractionConfig) -> Result<Extraction, ExtractionError> {
    extract_with_mode(field, poses, cfg, Mode::Naive)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surrounding_depth_cases() {
        assert!(sdd_accept(5.0, &[5.0; 8], 0.0025));
        assert!(!sdd_accept(5.0, &[5.0, 2.0, 5.0], 0.0025));
        assert!(sdd_accept(2.0, &[5.0; 8], 0.0025));
        assert!(sdd_accept(5.0, &[f64::INFINITY; 8], 0.0025));
        assert!(sdd_accept(5.0, &[f64::INFINITY, 4.99, f64::INFINITY], 0.0025));
        assert!(!sdd_accept(5.0, &[f64::INFINITY, 4.98, f64::INFINITY], 0.0025));
    }
}
