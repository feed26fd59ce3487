//! Ray discretization, compositing weights, median-style depth and the standard and
//! depth-windowed (CSD) color estimates.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assets::{CameraPose, ImageBuffer};
use crate::field::{FieldSample, RadianceField};
use crate::geometry::{Ray, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("invalid sampling range near={near}, far={far}, n={n}")]
    BadRange { near: f64, far: f64, n: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorMode {
    Standard,
    Csd,
}

impl std::str::FromStr for ColorMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(Self::Standard),
            "csd" => Ok(Self::Csd),
            other => Err(format!("unknown color mode {other:?} (expected standard or csd)")),
        }
    }
}

impl std::fmt::Display for ColorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Standard => "standard",
            Self::Csd => "csd",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderConfig {
    pub near: f64,
    pub far: f64,
    pub samples: usize,
    /// Extra samples drawn in proportion to the coarse weights; 0 disables resampling.
    pub resample: usize,
    pub color_mode: ColorMode,
    pub eps4: f64,
}

impl RenderConfig {
    pub fn new(near: f64, far: f64, samples: usize) -> Self {
        Self {
            near,
            far,
            samples,
            resample: 0,
            color_mode: ColorMode::Standard,
            eps4: 0.0025,
        }
    }

    pub fn with_color_mode(mut self, mode: ColorMode) -> Self {
        self.color_mode = mode;
        self
    }

    pub fn with_resample(mut self, resample: usize) -> Self {
        self.resample = resample;
        self
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if !(self.near > 0.0 && self.far > self.near && self.samples >= 1 && self.far.is_finite()) {
            return Err(RenderError::BadRange {
                near: self.near,
                far: self.far,
                n: self.samples,
            });
        }
        Ok(())
    }

    /// Width of one stratified bin.
    pub fn spacing(&self) -> f64 {
        (self.far - self.near) / self.samples as f64
    }
}

/// Sample distances along a ray with their interval lengths.
#[derive(Clone, Debug, PartialEq)]
pub struct RaySamples {
    pub origin: Vec3,
    pub direction: Vec3,
    pub t: Vec<f64>,
    pub delta: Vec<f64>,
}

impl RaySamples {
    pub fn positions(&self) -> Vec<Vec3> {
        self.t.iter().map(|&t| self.origin + self.direction * t).collect()
    }
}

/// Stratified samples: bin `k` spans `[near + k D, near + (k+1) D]`; midpoints without
/// jitter, uniform inside the bin otherwise.
pub fn sample_ray<R: Rng>(
    ray: &Ray,
    near: f64,
    far: f64,
    n: usize,
    jitter: Option<&mut R>,
) -> Result<RaySamples, RenderError> {
    if !(near > 0.0 && far > near && n >= 1 && far.is_finite()) {
        return Err(RenderError::BadRange { near, far, n });
    }
    let step = (far - near) / n as f64;
    let t = match jitter {
        None => (0..n).map(|k| near + (k as f64 + 0.5) * step).collect(),
        Some(rng) => (0..n)
            .map(|k| {
                let lo = near + k as f64 * step;
                (lo + rng.random::<f64>() * step).min(lo + step)
            })
            .collect(),
    };
    Ok(RaySamples {
        origin: ray.origin,
        direction: ray.direction,
        t,
        delta: vec![step; n],
    })
}

/// `w_i = T_i (1 - exp(-sigma_i delta_i))`, `T_i = exp(-sum_{j<i} sigma_j delta_j)`.
pub fn compositing_weights(sigma: &[f64], delta: &[f64]) -> Vec<f64> {
    debug_assert_eq!(sigma.len(), delta.len());
    let mut optical = 0.0f64;
    let mut w: Vec<f64> = sigma
        .iter()
        .zip(delta)
        .map(|(&s, &d)| {
            let x = s * d;
            let w = (-optical).exp() * -(-x).exp_m1();
            optical += x;
            w
        })
        .collect();
    // rounding can push the sum of a near-opaque ray a few ulps above one
    let mut total: f64 = w.iter().sum();
    while total > 1.0 {
        let k = (1.0 - f64::EPSILON * w.len() as f64) / total;
        w.iter_mut().for_each(|x| *x *= k);
        total = w.iter().sum();
    }
    w
}

/// First index whose cumulative weight strictly exceeds one half.
pub fn depth_index(weights: &[f64]) -> Option<usize> {
    let mut acc = 0.0;
    weights.iter().position(|&w| {
        acc += w;
        acc > 0.5
    })
}

/// Distance to the sample selected by [`depth_index`], or infinity.
pub fn render_depth(weights: &[f64], depths: &[f64]) -> f64 {
    depth_index(weights).map_or(f64::INFINITY, |i| depths[i])
}

pub fn render_color_standard(weights: &[f64], colors: &[[f64; 3]]) -> [f64; 3] {
    let mut c = [0.0; 3];
    for (w, ci) in weights.iter().zip(colors) {
        for k in 0..3 {
            c[k] += w * ci[k];
        }
    }
    c.map(|v| v.clamp(0.0, 1.0))
}

/// Indices of samples with `d (1 - eps4) <= d_i <= d (1 + eps4)`.
pub fn csd_window(depths: &[f64], d: f64, eps4: f64) -> Vec<usize> {
    let (lo, hi) = (d * (1.0 - eps4), d * (1.0 + eps4));
    (0..depths.len())
        .filter(|&i| depths[i] >= lo && depths[i] <= hi)
        .collect()
}

/// Color from the weights inside the depth window, rescaled to the total weight.
/// `None` when the window is empty or carries no weight.
pub fn render_color_csd(
    weights: &[f64],
    colors: &[[f64; 3]],
    depths: &[f64],
    d: f64,
    eps4: f64,
) -> Option<[f64; 3]> {
    let window = csd_window(depths, d, eps4);
    let total: f64 = weights.iter().sum();
    let inside: f64 = window.iter().map(|&i| weights[i]).sum();
    if window.is_empty() || inside <= 0.0 {
        return None;
    }
    let scale = total / inside;
    let mut c = [0.0; 3];
    for &i in &window {
        let w = weights[i] * scale;
        for k in 0..3 {
            c[k] += w * colors[i][k];
        }
    }
    Some(c.map(|v| v.clamp(0.0, 1.0)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderStatus {
    Accepted,
    RejectedInfiniteDepth,
    RejectedEmptyWindow,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RayRender {
    pub t: Vec<f64>,
    pub weights: Vec<f64>,
    pub depth: f64,
    pub color: [f64; 3],
    pub status: RenderStatus,
}

/// Sample distances drawn by inverting the piecewise-constant distribution of the coarse
/// weights at `m` stratified quantiles.
pub fn importance_samples(t: &[f64], delta: &[f64], weights: &[f64], m: usize) -> Vec<f64> {
    let floor = 1e-5;
    let pdf: Vec<f64> = weights.iter().map(|w| w + floor).collect();
    let total: f64 = pdf.iter().sum();
    let mut out = Vec::with_capacity(m);
    let mut acc = 0.0;
    let mut i = 0;
    for k in 0..m {
        let u = (k as f64 + 0.5) / m as f64 * total;
        while i + 1 < pdf.len() && acc + pdf[i] < u {
            acc += pdf[i];
            i += 1;
        }
        let frac = ((u - acc) / pdf[i]).clamp(0.0, 1.0);
        out.push(t[i] - 0.5 * delta[i] + frac * delta[i]);
    }
    out
}

/// Merges two sorted sample sets; each interval spans the midpoints to its neighbours,
/// bounded by `near` and `far`.
fn merge_samples(a: &[f64], b: &[f64], near: f64, far: f64) -> (Vec<f64>, Vec<f64>) {
    let mut t: Vec<f64> = a.iter().chain(b).copied().collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    let n = t.len();
    let delta = (0..n)
        .map(|i| {
            let lo = if i == 0 { near } else { 0.5 * (t[i - 1] + t[i]) };
            let hi = if i + 1 == n { far } else { 0.5 * (t[i] + t[i + 1]) };
            (hi - lo).max(0.0)
        })
        .collect();
    (t, delta)
}

fn shade(
    field: &(impl RadianceField + ?Sized),
    ray: &Ray,
    cfg: &RenderConfig,
    scratch: &mut Vec<FieldSample>,
) -> (Vec<f64>, Vec<f64>, Vec<FieldSample>) {
    let coarse = sample_ray::<rand_chacha::ChaCha8Rng>(ray, cfg.near, cfg.far, cfg.samples, None)
        .expect("render config validated by caller");
    let positions = coarse.positions();
    field.query_ray(&positions, &ray.direction, scratch);
    if cfg.resample == 0 {
        return (coarse.t, coarse.delta, std::mem::take(scratch));
    }
    let sigma: Vec<f64> = scratch.iter().map(|s| s.density).collect();
    let w = compositing_weights(&sigma, &coarse.delta);
    let fine = importance_samples(&coarse.t, &coarse.delta, &w, cfg.resample);
    let fine_pos: Vec<Vec3> = fine.iter().map(|&t| ray.at(t)).collect();
    let mut fine_samples = Vec::new();
    field.query_ray(&fine_pos, &ray.direction, &mut fine_samples);
    let (t, delta) = merge_samples(&coarse.t, &fine, cfg.near, cfg.far);
    // reassemble field samples in merged order
    let mut pairs: Vec<(f64, FieldSample)> = coarse
        .t
        .iter()
        .copied()
        .zip(scratch.iter().copied())
        .chain(fine.iter().copied().zip(fine_samples))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.dedup_by(|a, b| a.0 == b.0);
    (t, delta, pairs.into_iter().map(|p| p.1).collect())
}

/// Renders depth and color of one ray.
pub fn render_pixel(field: &(impl RadianceField + ?Sized), ray: &Ray, cfg: &RenderConfig) -> RayRender {
    let mut scratch = Vec::new();
    let (t, delta, samples) = shade(field, ray, cfg, &mut scratch);
    let sigma: Vec<f64> = samples.iter().map(|s| s.density).collect();
    let colors: Vec<[f64; 3]> = samples.iter().map(|s| s.color).collect();
    let weights = compositing_weights(&sigma, &delta);
    let depth = render_depth(&weights, &t);
    let standard = render_color_standard(&weights, &colors);
    let (color, status) = if !depth.is_finite() {
        (standard, RenderStatus::RejectedInfiniteDepth)
    } else {
        match cfg.color_mode {
            ColorMode::Standard => (standard, RenderStatus::Accepted),
            ColorMode::Csd => match render_color_csd(&weights, &colors, &t, depth, cfg.eps4) {
                Some(c) => (c, RenderStatus::Accepted),
                None => (standard, RenderStatus::RejectedEmptyWindow),
            },
        }
    };
    RayRender {
        t,
        weights,
        depth,
        color,
        status,
    }
}

/// Rendered depth only (infinity when the ray passes through).
pub fn render_ray_depth(field: &(impl RadianceField + ?Sized), ray: &Ray, cfg: &RenderConfig) -> f64 {
    let mut scratch = Vec::new();
    let (t, delta, samples) = shade(field, ray, cfg, &mut scratch);
    let sigma: Vec<f64> = samples.iter().map(|s| s.density).collect();
    render_depth(&compositing_weights(&sigma, &delta), &t)
}

/// Standard-mode image of a field through every pixel center of a pose, plus per-pixel depth.
pub fn render_image(
    field: &(impl RadianceField + ?Sized),
    pose: &CameraPose,
    cfg: &RenderConfig,
) -> (ImageBuffer, Vec<f64>) {
    let (w, h) = (pose.width, pose.height);
    let cfg = &cfg.with_color_mode(ColorMode::Standard);
    let rows: Vec<(Vec<[f64; 3]>, Vec<f64>)> = (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| {
                    let r = render_pixel(field, &pose.pixel_center_ray(x, y), cfg);
                    (r.color, r.depth)
                })
                .unzip()
        })
        .collect();
    let mut img = ImageBuffer::filled(w, h, 3, 0.0);
    let mut depth = Vec::with_capacity((w * h) as usize);
    for (y, (colors, depths)) in rows.into_iter().enumerate() {
        for (x, c) in colors.into_iter().enumerate() {
            img.set_rgb(x as u32, y as u32, c);
        }
        depth.extend(depths);
    }
    (img, depth)
}
