//! Trainable multi-branch hash field.
//!
//! Branch 0 contracts the global scene box, branch `i > 0` the cube of focus area `i`.
//! Every branch is evaluated for every point and the encodings are concatenated. A
//! density head maps the encoding to `(sigma, g)`, a color head maps `(g, SH(u))` to RGB.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::contract::Contraction;
use super::hash_grid::{self, HashGridConfig};
use super::mlp::{relu_backward, relu_in_place, sigmoid, softplus, Linear};
use super::sh::{sh_fill, sh_len};
use super::{FieldError, FieldSample, RadianceField};
use crate::assets::FocusArea;
use crate::geometry::{Aabb, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyFieldConfig {
    pub grid: HashGridConfig,
    pub hidden: usize,
    pub geo_features: usize,
    pub sh_degree: usize,
}

impl Default for ToyFieldConfig {
    fn default() -> Self {
        Self {
            grid: HashGridConfig::default(),
            hidden: 64,
            geo_features: 15,
            sh_degree: 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub domain: Aabb,
    pub contraction: Contraction,
}

impl Branch {
    pub fn new(domain: Aabb) -> Result<Self, FieldError> {
        Ok(Self {
            domain,
            contraction: Contraction::new(&domain)?,
        })
    }
}

/// Offsets of every parameter group inside the flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub tables: Vec<usize>,
    pub density_hidden: Linear,
    pub density_out: Linear,
    pub color_hidden: Linear,
    pub color_out: Linear,
    pub total: usize,
}

impl Layout {
    fn new(config: &ToyFieldConfig, branches: usize) -> Self {
        let table_len = config.grid.param_len();
        let tables: Vec<usize> = (0..branches).map(|b| b * table_len).collect();
        let enc = branches * config.grid.output_len();
        let h = config.hidden;
        let g = config.geo_features;
        let density_hidden = Linear::new(enc, h, branches * table_len);
        let density_out = Linear::new(h, 1 + g, density_hidden.end());
        let color_hidden = Linear::new(g + sh_len(config.sh_degree), h, density_out.end());
        let color_out = Linear::new(h, 3, color_hidden.end());
        let total = color_out.end();
        Self {
            tables,
            density_hidden,
            density_out,
            color_hidden,
            color_out,
            total,
        }
    }

    pub fn heads_start(&self) -> usize {
        self.density_hidden.offset
    }

    pub fn linears(&self) -> [Linear; 4] {
        [self.density_hidden, self.density_out, self.color_hidden, self.color_out]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyHashField {
    pub config: ToyFieldConfig,
    pub branches: Vec<Branch>,
    pub params: Vec<f64>,
    layout: Layout,
}

/// Activations of a batched forward pass, kept for the backward pass.
pub struct Forward {
    pub sigma: Vec<f64>,
    pub color: Vec<[f64; 3]>,
    raw_sigma: Vec<f64>,
    x0: DMatrix<f64>,
    h1: DMatrix<f64>,
    x2: DMatrix<f64>,
    h2: DMatrix<f64>,
    corners: Vec<(u32, f64)>,
}

impl ToyHashField {
    /// A freshly initialized field: tables uniform in `[-1e-4, 1e-4]`, head weights and
    /// biases uniform in `+-1/sqrt(fan_in)`.
    pub fn new(config: ToyFieldConfig, scene_box: &Aabb, areas: &[FocusArea], seed: u64) -> Result<Self, FieldError> {
        let mut branches = vec![Branch::new(*scene_box)?];
        for a in areas {
            branches.push(Branch::new(a.cube())?);
        }
        let layout = Layout::new(&config, branches.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; layout.total];
        for v in &mut params[..layout.heads_start()] {
            *v = rng.random_range(-1e-4..=1e-4);
        }
        for l in layout.linears() {
            let bound = 1.0 / (l.inputs as f64).sqrt();
            for v in &mut params[l.offset..l.end()] {
                *v = rng.random_range(-bound..=bound);
            }
        }
        Ok(Self {
            config,
            branches,
            params,
            layout,
        })
    }

    pub fn from_parts(config: ToyFieldConfig, branches: Vec<Branch>, params: Vec<f64>) -> Result<Self, FieldError> {
        if branches.is_empty() {
            return Err(FieldError::Config("a toy field needs at least the global branch".into()));
        }
        let layout = Layout::new(&config, branches.len());
        if params.len() != layout.total {
            return Err(FieldError::Config(format!(
                "expected {} parameters, found {}",
                layout.total,
                params.len()
            )));
        }
        if !params.iter().all(|v| v.is_finite()) {
            return Err(FieldError::Config("non-finite parameters".into()));
        }
        Ok(Self {
            config,
            branches,
            params,
            layout,
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Sets every head weight and bias to zero: `sigma = softplus(0)`, color 0.5 everywhere.
    pub fn zero_heads(&mut self) {
        let start = self.layout.heads_start();
        self.params[start..].fill(0.0);
    }

    pub fn encoding_len(&self) -> usize {
        self.branches.len() * self.config.grid.output_len()
    }

    /// Concatenated branch encodings `h(p)`.
    pub fn multi_branch_encode(&self, p: &Vec3) -> Vec<f64> {
        let mut out = vec![0.0; self.encoding_len()];
        self.encode_into(p, &mut out, None);
        out
    }

    fn encode_into(&self, p: &Vec3, out: &mut [f64], mut corners: Option<&mut [(u32, f64)]>) {
        let grid = &self.config.grid;
        let block = grid.output_len();
        let table_len = grid.param_len();
        let span = grid.levels * 8;
        for (b, branch) in self.branches.iter().enumerate() {
            let pt = branch.contraction.apply(p);
            let off = self.layout.tables[b];
            let table = &self.params[off..off + table_len];
            let block_out = &mut out[b * block..(b + 1) * block];
            match corners.as_deref_mut() {
                Some(c) => {
                    let c = &mut c[b * span..(b + 1) * span];
                    hash_grid::encode(grid, table, &pt, block_out, Some(c));
                    // make corner offsets absolute in the parameter vector
                    for e in c.iter_mut() {
                        e.0 += off as u32;
                    }
                }
                None => hash_grid::encode(grid, table, &pt, block_out, None),
            }
        }
    }

    pub fn try_query(&self, p: &Vec3, u: &Vec3) -> Result<FieldSample, FieldError> {
        let n = u.norm();
        if (n - 1.0).abs() > 1e-6 {
            return Err(FieldError::NonUnitDirection(n));
        }
        let f = self.forward(std::slice::from_ref(p), std::slice::from_ref(u), false);
        Ok(FieldSample {
            density: f.sigma[0],
            color: f.color[0],
        })
    }

    /// Batched forward pass over samples with per-sample directions.
    pub fn forward(&self, positions: &[Vec3], dirs: &[Vec3], keep_corners: bool) -> Forward {
        debug_assert_eq!(positions.len(), dirs.len());
        let s = positions.len();
        let enc = self.encoding_len();
        let per_point = self.branches.len() * self.config.grid.levels * 8;
        let mut corners = if keep_corners {
            vec![(0u32, 0.0); s * per_point]
        } else {
            Vec::new()
        };
        let mut x0 = DMatrix::zeros(s, enc);
        let mut row = vec![0.0; enc];
        for (i, p) in positions.iter().enumerate() {
            let c = keep_corners.then(|| &mut corners[i * per_point..(i + 1) * per_point]);
            self.encode_into(p, &mut row, c);
            for (j, v) in row.iter().enumerate() {
                x0[(i, j)] = *v;
            }
        }
        let l = &self.layout;
        let mut h1 = l.density_hidden.forward(&self.params, &x0);
        relu_in_place(&mut h1);
        let y1 = l.density_out.forward(&self.params, &h1);
        let g = self.config.geo_features;
        let shn = sh_len(self.config.sh_degree);
        let mut x2 = DMatrix::zeros(s, g + shn);
        x2.columns_mut(0, g).copy_from(&y1.columns(1, g));
        let mut sh = vec![0.0; shn];
        for (i, u) in dirs.iter().enumerate() {
            sh_fill(u, self.config.sh_degree, &mut sh);
            for (j, v) in sh.iter().enumerate() {
                x2[(i, g + j)] = *v;
            }
        }
        let mut h2 = l.color_hidden.forward(&self.params, &x2);
        relu_in_place(&mut h2);
        let y2 = l.color_out.forward(&self.params, &h2);
        let raw_sigma: Vec<f64> = y1.column(0).iter().copied().collect();
        let sigma = raw_sigma.iter().map(|&r| softplus(r)).collect();
        let color = (0..s)
            .map(|i| [sigmoid(y2[(i, 0)]), sigmoid(y2[(i, 1)]), sigmoid(y2[(i, 2)])])
            .collect();
        Forward {
            sigma,
            color,
            raw_sigma,
            x0,
            h1,
            x2,
            h2,
            corners,
        }
    }

    /// Accumulates into `grad` the parameter gradient of a scalar loss whose gradients with
    /// respect to the outputs of `fwd` are `d_sigma` and `d_color`.
    pub fn backward(&self, fwd: &Forward, d_sigma: &[f64], d_color: &[[f64; 3]], grad: &mut [f64]) {
        let s = fwd.sigma.len();
        let l = &self.layout;
        let p = &self.params;
        let dy2 = DMatrix::from_fn(s, 3, |i, k| {
            let c = fwd.color[i][k];
            d_color[i][k] * c * (1.0 - c)
        });
        let mut dh2 = l.color_out.backward(p, &fwd.h2, &dy2, grad);
        relu_backward(&fwd.h2, &mut dh2);
        let dx2 = l.color_hidden.backward(p, &fwd.x2, &dh2, grad);
        let g = self.config.geo_features;
        let mut dy1 = DMatrix::zeros(s, 1 + g);
        for i in 0..s {
            dy1[(i, 0)] = d_sigma[i] * sigmoid(fwd.raw_sigma[i]);
        }
        dy1.columns_mut(1, g).copy_from(&dx2.columns(0, g));
        let mut dh1 = l.density_out.backward(p, &fwd.h1, &dy1, grad);
        relu_backward(&fwd.h1, &mut dh1);
        let dx0 = l.density_hidden.backward(p, &fwd.x0, &dh1, grad);
        if fwd.corners.is_empty() {
            return;
        }
        let f = self.config.grid.features;
        let levels = self.config.grid.levels;
        let per_point = self.branches.len() * levels * 8;
        for i in 0..s {
            let cs = &fwd.corners[i * per_point..(i + 1) * per_point];
            for (slot, &(base, w)) in cs.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                // slot = (branch * levels + level) * 8 + corner, feature block = branch * levels + level
                let col = (slot / 8) * f;
                for j in 0..f {
                    grad[base as usize + j] += w * dx0[(i, col + j)];
                }
            }
        }
    }
}

impl RadianceField for ToyHashField {
    fn query(&self, p: &Vec3, dir: &Vec3) -> FieldSample {
        let f = self.forward(std::slice::from_ref(p), std::slice::from_ref(dir), false);
        FieldSample {
            density: f.sigma[0],
            color: f.color[0],
        }
    }

    fn query_ray(&self, positions: &[Vec3], dir: &Vec3, out: &mut Vec<FieldSample>) {
        let dirs = vec![*dir; positions.len()];
        let f = self.forward(positions, &dirs, false);
        out.clear();
        out.extend(f.sigma.iter().zip(&f.color).map(|(&density, &color)| FieldSample { density, color }));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> Aabb {
        Aabb::new([-1.0; 3], [1.0; 3])
    }

    fn area() -> FocusArea {
        FocusArea::new([0.2, 0.0, 0.0], 0.3)
    }

    #[test]
    fn zero_heads_give_softplus_zero_and_gray() {
        let mut f = ToyHashField::new(ToyFieldConfig::default(), &unit_box(), &[], 1).unwrap();
        f.zero_heads();
        let s = f.try_query(&Vec3::new(0.1, 0.2, 0.3), &Vec3::z()).unwrap();
        assert!((s.density - 2f64.ln()).abs() < 1e-15);
        assert_eq!(s.color, [0.5; 3]);
    }

    #[test]
    fn query_is_deterministic_and_rejects_non_unit() {
        let f = ToyHashField::new(ToyFieldConfig::default(), &unit_box(), &[area()], 5).unwrap();
        let p = Vec3::new(0.3, -0.1, 0.2);
        let u = Vec3::new(0.0, 0.6, 0.8);
        assert_eq!(f.try_query(&p, &u).unwrap(), f.try_query(&p, &u).unwrap());
        assert!(f.try_query(&p, &Vec3::new(1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn branch_count_sets_encoding_length() {
        let f0 = ToyHashField::new(ToyFieldConfig::default(), &unit_box(), &[], 1).unwrap();
        assert_eq!(f0.multi_branch_encode(&Vec3::zeros()).len(), 16);
        let f1 = ToyHashField::new(ToyFieldConfig::default(), &unit_box(), &[area()], 1).unwrap();
        // local branches are evaluated even far away from their cube
        assert_eq!(f1.multi_branch_encode(&Vec3::new(50.0, 0.0, 0.0)).len(), 32);
        assert_eq!(f1.multi_branch_encode(&Vec3::new(0.2, 0.0, 0.0)).len(), 32);
        // the global block is the single-branch encoding when the tables agree
        let mut f1c = f1.clone();
        let n = f0.config.grid.param_len();
        f1c.params[..n].copy_from_slice(&f0.params[..n]);
        let p = Vec3::new(0.3, 0.4, -0.5);
        assert_eq!(&f1c.multi_branch_encode(&p)[..16], &f0.multi_branch_encode(&p)[..]);
    }

    #[test]
    fn zero_tables_give_zero_encoding() {
        let mut f = ToyHashField::new(ToyFieldConfig::default(), &unit_box(), &[area()], 1).unwrap();
        let n = f.layout().heads_start();
        f.params[..n].fill(0.0);
        assert!(f.multi_branch_encode(&Vec3::new(0.1, 0.5, 0.9)).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn density_is_continuous_across_cube_face() {
        let mut f = ToyHashField::new(ToyFieldConfig::default(), &unit_box(), &[area()], 3).unwrap();
        // larger table values so the probe is meaningful
        let n = f.layout().heads_start();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for v in &mut f.params[..n] {
            *v = rng.random_range(-1.0..1.0);
        }
        let width = 0.6;
        let delta = 1e-4 * width;
        let face_x = 0.2 + 0.3;
        let u = Vec3::z();
        for y in [-0.2, 0.0, 0.13] {
            let a = f.query(&Vec3::new(face_x - 0.5 * delta, y, 0.05), &u).density;
            let b = f.query(&Vec3::new(face_x + 0.5 * delta, y, 0.05), &u).density;
            let far = f.query(&Vec3::new(face_x + 0.05, y, 0.05), &u).density;
            assert!((a - b).abs() < 0.05 * (a - far).abs().max(1e-3), "{a} {b} {far}");
        }
    }

    #[test]
    fn batched_query_matches_single_queries() {
        let f = ToyHashField::new(ToyFieldConfig::default(), &unit_box(), &[area()], 8).unwrap();
        let pts: Vec<Vec3> = (0..10).map(|i| Vec3::new(0.1 * i as f64, -0.05 * i as f64, 0.3)).collect();
        let u = Vec3::new(0.0, 0.0, -1.0);
        let mut out = Vec::new();
        f.query_ray(&pts, &u, &mut out);
        for (p, s) in pts.iter().zip(&out) {
            let single = f.query(p, &u);
            assert!((single.density - s.density).abs() < 1e-12);
        }
    }
}
