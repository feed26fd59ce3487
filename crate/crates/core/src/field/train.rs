//! Training of the toy field: photometric squared error plus the weighted collinearity
//! loss on edge-aware pixel triplets, optimized with Adam.
//!
//! The collinearity term needs a depth that is differentiable in the field parameters.
//! Training therefore uses the expected depth `sum_i w_i t_i + T_(n+1) far`; the
//! cumulative-weight depth is piecewise constant and has zero gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::toy::ToyHashField;
use super::FieldError;
use crate::assets::{CameraPose, ImageBuffer};
use crate::collinearity::edges::{detect_edges, CannyParams, EdgeMap};
use crate::collinearity::loss::{collinearity_loss, CollinearityParams};
use crate::collinearity::triplet::{direction_steps, sample_triplet_with};
use crate::geometry::{Aabb, Ray, Vec3};
use crate::render::compositing_weights;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub triplets_per_batch: usize,
    pub samples: usize,
    pub near: f64,
    pub far: f64,
    pub learning_rate: f64,
    pub lambda_col: f64,
    pub collinearity: CollinearityParams,
    pub canny: CannyParams,
    pub seed: u64,
    /// Triplets per gradient chunk; chunk gradients are summed in a fixed order.
    pub chunk_triplets: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            triplets_per_batch: 16,
            samples: 128,
            near: 0.1,
            far: 10.0,
            learning_rate: 1e-2,
            lambda_col: 0.01,
            collinearity: CollinearityParams::default(),
            canny: CannyParams::default(),
            seed: 0,
            chunk_triplets: 4,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), FieldError> {
        let bad = |m: &str| Err(FieldError::Config(m.to_string()));
        if self.triplets_per_batch == 0 || self.samples == 0 || self.chunk_triplets == 0 {
            return bad("batch, sample and chunk sizes must be positive");
        }
        if !(self.near > 0.0 && self.far > self.near && self.far.is_finite()) {
            return bad("need 0 < near < far");
        }
        if !(self.learning_rate > 0.0) || !(self.lambda_col >= 0.0) {
            return bad("learning rate must be positive and lambda_col non-negative");
        }
        Ok(())
    }
}

/// One supervised ray with its sample distances.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainRay {
    pub ray: Ray,
    pub target: [f64; 3],
    pub t: Vec<f64>,
    pub delta: Vec<f64>,
}

/// Three consecutive rays of a batch; `candidate` enables the collinearity term.
#[derive(Clone, Debug, PartialEq)]
pub struct TripletRays {
    pub rays: [TrainRay; 3],
    pub candidate: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub photometric: f64,
    pub collinearity: f64,
}

/// Loss settings shared by training and gradient checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossConfig {
    pub far: f64,
    pub lambda_col: f64,
    pub collinearity: CollinearityParams,
}

struct RayResult {
    color: [f64; 3],
    depth: f64,
    weights: Vec<f64>,
    trans_after: Vec<f64>,
    t_final: f64,
}

fn composite(sigma: &[f64], colors: &[[f64; 3]], ray: &TrainRay, far: f64) -> RayResult {
    let weights = compositing_weights(sigma, &ray.delta);
    let mut trans_after = Vec::with_capacity(sigma.len());
    let mut optical = 0.0f64;
    let mut color = [0.0; 3];
    let mut depth = 0.0;
    for i in 0..sigma.len() {
        optical += sigma[i] * ray.delta[i];
        trans_after.push((-optical).exp());
        for k in 0..3 {
            color[k] += weights[i] * colors[i][k];
        }
        depth += weights[i] * ray.t[i];
    }
    let t_final = (-optical).exp();
    depth += t_final * far;
    RayResult {
        color,
        depth,
        weights,
        trans_after,
        t_final,
    }
}

/// Gradients of a ray loss with respect to sample densities and colors, given the loss
/// gradients `g_c` (rendered color) and `g_d` (expected depth).
fn composite_backward(
    r: &RayResult,
    colors: &[[f64; 3]],
    ray: &TrainRay,
    far: f64,
    g_c: [f64; 3],
    g_d: f64,
    d_sigma: &mut [f64],
    d_color: &mut [[f64; 3]],
) {
    let n = r.weights.len();
    // background term of the expected depth
    let end = g_d * r.t_final * far;
    // tail = sum_{i>k} w_i a_i with a_i = c_i . g_c + g_d t_i
    let mut tail = 0.0;
    for k in (0..n).rev() {
        let own = colors[k][0] * g_c[0] + colors[k][1] * g_c[1] + colors[k][2] * g_c[2] + g_d * ray.t[k];
        d_sigma[k] = ray.delta[k] * (r.trans_after[k] * own - tail - end);
        tail += r.weights[k] * own;
        for c in 0..3 {
            d_color[k][c] = r.weights[k] * g_c[c];
        }
    }
}

/// Loss and exact parameter gradient over a batch of triplets.
pub fn loss_and_gradient(field: &ToyHashField, batch: &[TripletRays], cfg: &LossConfig, chunk: usize) -> (LossParts, Vec<f64>) {
    let n_rays = (batch.len() * 3) as f64;
    let n_triplets = batch.len() as f64;
    let partials: Vec<(LossParts, Vec<f64>)> = batch
        .par_chunks(chunk.max(1))
        .map(|triplets| {
            let mut grad = vec![0.0; field.params.len()];
            let mut parts = LossParts::default();
            let rays: Vec<&TrainRay> = triplets.iter().flat_map(|t| t.rays.iter()).collect();
            let mut positions = Vec::new();
            let mut dirs = Vec::new();
            let mut spans = Vec::with_capacity(rays.len());
            for r in &rays {
                let start = positions.len();
                positions.extend(r.t.iter().map(|&t| r.ray.at(t)));
                dirs.extend(std::iter::repeat_n(r.ray.direction, r.t.len()));
                spans.push(start..positions.len());
            }
            let fwd = field.forward(&positions, &dirs, true);
            let results: Vec<RayResult> = rays
                .iter()
                .zip(&spans)
                .map(|(r, s)| composite(&fwd.sigma[s.clone()], &fwd.color[s.clone()], r, cfg.far))
                .collect();
            let mut g_c = vec![[0.0; 3]; rays.len()];
            let mut g_d = vec![0.0; rays.len()];
            for (i, (r, res)) in rays.iter().zip(&results).enumerate() {
                let mut sq = 0.0;
                for k in 0..3 {
                    let e = res.color[k] - r.target[k];
                    sq += e * e;
                    g_c[i][k] = 2.0 * e / n_rays;
                }
                parts.photometric += sq / n_rays;
            }
            for (j, trip) in triplets.iter().enumerate() {
                if !trip.candidate || cfg.lambda_col == 0.0 {
                    continue;
                }
                let d = [results[3 * j].depth, results[3 * j + 1].depth, results[3 * j + 2].depth];
                let c = [trip.rays[0].target, trip.rays[1].target, trip.rays[2].target];
                let u = [&trip.rays[0].ray.direction, &trip.rays[1].ray.direction, &trip.rays[2].ray.direction];
                let l = collinearity_loss(d, &c, u, &cfg.collinearity);
                parts.collinearity += l.value / n_triplets;
                for k in 0..3 {
                    g_d[3 * j + k] += cfg.lambda_col * l.grad[k] / n_triplets;
                }
            }
            let mut d_sigma = vec![0.0; positions.len()];
            let mut d_color = vec![[0.0; 3]; positions.len()];
            for (i, (r, res)) in rays.iter().zip(&results).enumerate() {
                let s = spans[i].clone();
                composite_backward(
                    res,
                    &fwd.color[s.clone()],
                    r,
                    cfg.far,
                    g_c[i],
                    g_d[i],
                    &mut d_sigma[s.clone()],
                    &mut d_color[s],
                );
            }
            field.backward(&fwd, &d_sigma, &d_color, &mut grad);
            (parts, grad)
        })
        .collect();
    let mut total = LossParts::default();
    let mut grad = vec![0.0; field.params.len()];
    for (p, g) in partials {
        total.photometric += p.photometric;
        total.collinearity += p.collinearity;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    total.total = total.photometric + cfg.lambda_col * total.collinearity;
    (total, grad)
}

/// Adam with the usual bias correction.
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    pub fn new(len: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.99,
            eps: 1e-15,
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for i in 0..params.len() {
            let g = grad[i];
            if g == 0.0 && self.m[i] == 0.0 && self.v[i] == 0.0 {
                continue;
            }
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// A training image with its pose and edge map.
pub struct TrainView<'a> {
    pub pose: &'a CameraPose,
    pub image: &'a ImageBuffer,
    pub edges: EdgeMap,
}

impl<'a> TrainView<'a> {
    pub fn new(pose: &'a CameraPose, image: &'a ImageBuffer, canny: &CannyParams) -> Result<Self, FieldError> {
        if pose.width != image.width || pose.height != image.height {
            return Err(FieldError::Config(format!(
                "image of {}x{} does not match pose {} ({}x{})",
                image.width, image.height, pose.id, pose.width, pose.height
            )));
        }
        let edges = detect_edges(image, canny).map_err(|e| FieldError::Config(e.to_string()))?;
        Ok(Self { pose, image, edges })
    }
}

/// Jittered stratified sample distances.
pub fn jittered_samples<R: Rng>(rng: &mut R, near: f64, far: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let step = (far - near) / n as f64;
    let t = (0..n).map(|k| near + (k as f64 + rng.random::<f64>()) * step).collect();
    (t, vec![step; n])
}

fn train_ray(view: &TrainView, q: [u32; 2], t: Vec<f64>, delta: Vec<f64>) -> TrainRay {
    TrainRay {
        ray: view.pose.pixel_center_ray(q[0], q[1]),
        target: view.image.rgb(q[0], q[1]),
        t,
        delta,
    }
}

/// Draws one iteration's triplets. Randomness comes from stream `iteration` of the seed.
pub fn sample_batch(views: &[TrainView], cfg: &TrainConfig, iteration: u64) -> Vec<TripletRays> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(iteration);
    let steps = direction_steps(cfg.collinearity.max_segment as f64 / 2.0);
    (0..cfg.triplets_per_batch)
        .map(|_| {
            let vi = rng.random_range(0..views.len());
            let view = &views[vi];
            let trip = sample_triplet_with(&view.edges, vi, &mut rng, &steps);
            let rays = trip.q.map(|q| {
                let (t, d) = jittered_samples(&mut rng, cfg.near, cfg.far, cfg.samples);
                train_ray(view, q, t, d)
            });
            TripletRays {
                rays,
                candidate: trip.candidate,
            }
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    pub loss: Vec<f64>,
    pub photometric: Vec<f64>,
    pub collinearity: Vec<f64>,
}

/// Cube around the camera origins with twice their largest half-extent, at least 1 m.
pub fn global_box(poses: &[CameraPose]) -> Option<Aabb> {
    let b = Aabb::from_points(poses.iter().map(|p| &p.origin))?;
    let c = b.center();
    let half = (0..3).map(|k| 0.5 * (b.max[k] - b.min[k])).fold(0.5, f64::max) * 2.0;
    Some(Aabb::new([c.x - half, c.y - half, c.z - half], [c.x + half, c.y + half, c.z + half]))
}

/// Optimizes `field` in place. Deterministic for a fixed configuration.
pub fn train_toy(field: &mut ToyHashField, views: &[TrainView], cfg: &TrainConfig) -> Result<TrainReport, FieldError> {
    cfg.validate()?;
    if views.is_empty() {
        return Err(FieldError::Config("no training views".into()));
    }
    let loss_cfg = LossConfig {
        far: cfg.far,
        lambda_col: cfg.lambda_col,
        collinearity: cfg.collinearity,
    };
    let mut adam = Adam::new(field.params.len(), cfg.learning_rate);
    let mut report = TrainReport::default();
    for it in 0..cfg.iterations {
        let batch = sample_batch(views, cfg, it as u64);
        let (parts, grad) = loss_and_gradient(field, &batch, &loss_cfg, cfg.chunk_triplets);
        adam.update(&mut field.params, &grad);
        report.loss.push(parts.total);
        report.photometric.push(parts.photometric);
        report.collinearity.push(parts.collinearity);
        if (it + 1) % 250 == 0 {
            log::info!("iteration {} loss {:.6} photometric {:.6}", it + 1, parts.total, parts.photometric);
        }
    }
    Ok(report)
}

/// Root-mean-square color error over every `stride`-th pixel of each view, rendered with
/// midpoint samples through the training color model.
pub fn photometric_rmse(field: &ToyHashField, views: &[TrainView], samples: usize, near: f64, far: f64, stride: u32) -> f64 {
    let step = (far - near) / samples as f64;
    let t: Vec<f64> = (0..samples).map(|k| near + (k as f64 + 0.5) * step).collect();
    let delta = vec![step; samples];
    let mut rays = Vec::new();
    for v in views {
        for y in (0..v.pose.height).step_by(stride as usize) {
            for x in (0..v.pose.width).step_by(stride as usize) {
                rays.push(train_ray(v, [x, y], t.clone(), delta.clone()));
            }
        }
    }
    let sq: f64 = rays
        .par_chunks(64)
        .map(|chunk| {
            let positions: Vec<Vec3> = chunk.iter().flat_map(|r| r.t.iter().map(|&t| r.ray.at(t))).collect();
            let dirs: Vec<Vec3> = chunk.iter().flat_map(|r| std::iter::repeat_n(r.ray.direction, r.t.len())).collect();
            let fwd = field.forward(&positions, &dirs, false);
            chunk
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let s = i * samples..(i + 1) * samples;
                    let res = composite(&fwd.sigma[s.clone()], &fwd.color[s], r, far);
                    (0..3).map(|k| (res.color[k] - r.target[k]).powi(2)).sum::<f64>()
                })
                .sum::<f64>()
        })
        .sum();
    (sq / (3.0 * rays.len() as f64)).sqrt()
}
