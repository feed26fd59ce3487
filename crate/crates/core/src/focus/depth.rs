//! Per-camera depth of highest ray concentration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FocusError;
use crate::assets::CameraPose;
use crate::geometry::{Aabb, Vec3};

#[derive(Clone, Debug, PartialEq)]
pub struct CausticPoint {
    pub position: Vec3,
    pub depth: f64,
    pub camera_id: String,
}

/// Log-spaced depth grid `[t_min, t_max]` with `steps` nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TSearch {
    pub t_min: f64,
    pub t_max: f64,
    pub steps: usize,
}

impl TSearch {
    pub const DEFAULT_MIN_FACTOR: f64 = 0.01;
    pub const DEFAULT_MAX_FACTOR: f64 = 4.0;
    pub const DEFAULT_STEPS: usize = 256;

    /// `[0.01 s, 4 s]` with `s` the bounding-box diagonal of the camera origins.
    pub fn for_poses(poses: &[CameraPose]) -> Result<Self, FocusError> {
        let scale = scene_scale(poses);
        if !(scale > 0.0) {
            return Err(FocusError::Config("camera origins coincide, scene scale is zero".into()));
        }
        Ok(Self {
            t_min: Self::DEFAULT_MIN_FACTOR * scale,
            t_max: Self::DEFAULT_MAX_FACTOR * scale,
            steps: Self::DEFAULT_STEPS,
        })
    }

    pub fn validate(&self) -> Result<(), FocusError> {
        if !(self.t_min >= 0.0 && self.t_max > self.t_min && self.t_max.is_finite() && self.steps >= 2) {
            return Err(FocusError::Config(format!("invalid depth search {self:?}")));
        }
        Ok(())
    }

    /// Grid nodes in increasing order. With `t_min = 0` the first node is 0 and the rest
    /// are log-spaced from `t_max / 1000`.
    pub fn grid(&self) -> Vec<f64> {
        let (lo, n, mut out) = if self.t_min > 0.0 {
            (self.t_min, self.steps, Vec::with_capacity(self.steps))
        } else {
            (self.t_max * 1e-3, self.steps - 1, vec![0.0])
        };
        let (a, b) = (lo.ln(), self.t_max.ln());
        for k in 0..n {
            let t = if k + 1 == n {
                self.t_max
            } else if k == 0 {
                lo
            } else {
                (a + (b - a) * k as f64 / (n - 1) as f64).exp()
            };
            out.push(t);
        }
        out
    }
}

pub fn scene_scale(poses: &[CameraPose]) -> f64 {
    Aabb::from_points(poses.iter().map(|p| &p.origin)).map_or(0.0, |b| b.diagonal())
}

/// Sum of distances from `x_k(t)` to its `n` nearest neighbors among the other rays.
fn concentration(poses: &[CameraPose], k: usize, n: usize, t: f64, scratch: &mut Vec<f64>) -> f64 {
    let x = poses[k].origin + poses[k].viewing_direction * t;
    scratch.clear();
    for (j, p) in poses.iter().enumerate() {
        if j != k {
            scratch.push((p.origin + p.viewing_direction * t - x).norm());
        }
    }
    if n < scratch.len() {
        scratch.select_nth_unstable_by(n - 1, f64::total_cmp);
        scratch.truncate(n);
    }
    // order-independent sum for a deterministic value
    scratch.sort_unstable_by(f64::total_cmp);
    scratch.iter().sum()
}

const GOLDEN_ITERS: usize = 60;

/// The grid minimizer of the concentration objective (smallest `t` on ties), refined by
/// golden-section search between its grid neighbors. The refined value replaces the grid
/// node only when strictly better.
pub fn optimal_ray_depth(camera: usize, poses: &[CameraPose], n: usize, search: &TSearch) -> Result<f64, FocusError> {
    search.validate()?;
    if n == 0 {
        return Err(FocusError::Config("neighbors must be at least 1".into()));
    }
    if poses.len() < n + 1 {
        return Err(FocusError::TooFewCameras {
            needed: n + 1,
            found: poses.len(),
        });
    }
    let grid = search.grid();
    Ok(depth_on_grid(camera, poses, n, &grid))
}

fn depth_on_grid(camera: usize, poses: &[CameraPose], n: usize, grid: &[f64]) -> f64 {
    let mut scratch = Vec::with_capacity(poses.len());
    let mut f = |t: f64| concentration(poses, camera, n, t, &mut scratch);
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for (i, &t) in grid.iter().enumerate() {
        let v = f(t);
        if v < best_val {
            best_val = v;
            best = i;
        }
    }
    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(grid.len() - 1)];
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERS {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
    }
    let (t_ref, v_ref) = if fc <= fd { (c, fc) } else { (d, fd) };
    if v_ref < best_val {
        t_ref
    } else {
        grid[best]
    }
}

/// One caustic point `o + t u` per camera, computed in parallel.
pub fn build_caustic_points(poses: &[CameraPose], n: usize, search: &TSearch) -> Result<Vec<CausticPoint>, FocusError> {
    search.validate()?;
    if poses.len() < n + 1 || n == 0 {
        return Err(FocusError::TooFewCameras {
            needed: n.max(1) + 1,
            found: poses.len(),
        });
    }
    let grid = search.grid();
    Ok((0..poses.len())
        .into_par_iter()
        .map(|k| {
            let t = depth_on_grid(k, poses, n, &grid);
            CausticPoint {
                position: poses[k].origin + poses[k].viewing_direction * t,
                depth: t,
                camera_id: poses[k].id.clone(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize) -> Vec<CameraPose> {
        (0..n)
            .map(|k| {
                let a = k as f64 * std::f64::consts::TAU / n as f64;
                let eye = Vec3::new(a.cos(), a.sin(), 0.0);
                CameraPose::look_at(format!("c{k:02}"), eye, Vec3::zeros(), Vec3::z(), 60.0, 32, 32).unwrap()
            })
            .collect()
    }

    #[test]
    fn grid_is_log_spaced_with_exact_ends() {
        let s = TSearch {
            t_min: 0.5,
            t_max: 8.0,
            steps: 5,
        };
        let g = s.grid();
        for (a, b) in g.iter().zip([0.5, 1.0, 2.0, 4.0, 8.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!((g[0], g[4]), (0.5, 8.0));
        let z = TSearch { t_min: 0.0, ..s }.grid();
        assert_eq!(z.len(), 5);
        assert_eq!(z[0], 0.0);
        assert!(z.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn circle_rays_meet_at_unit_depth() {
        let poses = circle(8);
        let s = TSearch {
            t_min: 0.1,
            t_max: 4.0,
            steps: 256,
        };
        for k in 0..8 {
            let t = optimal_ray_depth(k, &poses, 1, &s).unwrap();
            assert!((t - 1.0).abs() < 1e-6, "{t}");
        }
        let pts = build_caustic_points(&poses, 1, &s).unwrap();
        assert!(pts.iter().all(|p| p.position.norm() < 1e-6));
    }

    #[test]
    fn parallel_cameras_pick_smallest_depth() {
        let poses: Vec<CameraPose> = (0..2)
            .map(|k| {
                let eye = Vec3::new(k as f64, 0.0, 0.0);
                CameraPose::look_at(format!("p{k}"), eye, eye + Vec3::y(), Vec3::z(), 60.0, 32, 32).unwrap()
            })
            .collect();
        let s = TSearch {
            t_min: 0.1,
            t_max: 4.0,
            steps: 64,
        };
        assert_eq!(optimal_ray_depth(0, &poses, 1, &s).unwrap(), 0.1);
    }

    #[test]
    fn single_camera_is_rejected() {
        let poses = circle(1);
        let s = TSearch {
            t_min: 0.1,
            t_max: 4.0,
            steps: 8,
        };
        assert!(matches!(build_caustic_points(&poses, 1, &s), Err(FocusError::TooFewCameras { .. })));
    }
}
