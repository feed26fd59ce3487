//! Multiresolution hash encoding with trilinear interpolation.
//!
//! Tables are stored level-major in a flat slice: entry `(level, index, feature)` lives at
//! `(level * T + index) * F + feature`.

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

pub const PRIMES: [u32; 3] = [1, 2_654_435_761, 805_459_861];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HashGridConfig {
    pub levels: usize,
    pub features: usize,
    pub log2_table: u32,
    pub n_min: f64,
    pub n_max: f64,
}

impl Default for HashGridConfig {
    fn default() -> Self {
        Self {
            levels: 8,
            features: 2,
            log2_table: 14,
            n_min: 16.0,
            n_max: 256.0,
        }
    }
}

impl HashGridConfig {
    pub fn table_size(&self) -> usize {
        1 << self.log2_table
    }

    pub fn output_len(&self) -> usize {
        self.levels * self.features
    }

    pub fn param_len(&self) -> usize {
        self.levels * self.table_size() * self.features
    }

    /// `floor(N_min * b^l)` with `b` chosen so the last level reaches `N_max`.
    pub fn resolution(&self, level: usize) -> f64 {
        if self.levels <= 1 {
            return self.n_min.floor();
        }
        let b = ((self.n_max.ln() - self.n_min.ln()) / (self.levels - 1) as f64).exp();
        (self.n_min * b.powi(level as i32) + 1e-9).floor()
    }
}

#[inline]
pub fn hash(c: [u32; 3], table_size: usize) -> usize {
    let h = c[0].wrapping_mul(PRIMES[0]) ^ c[1].wrapping_mul(PRIMES[1]) ^ c[2].wrapping_mul(PRIMES[2]);
    h as usize % table_size
}

/// The 8 hashed corners and trilinear weights around `pos`, given in lattice units of
/// one level. Corner `k` has offset bits `(k & 1, k >> 1 & 1, k >> 2 & 1)`.
#[inline]
pub fn lattice_corners(pos: [f64; 3], table_size: usize) -> ([usize; 8], [f64; 8]) {
    let base = pos.map(|v| v.floor());
    let frac = [pos[0] - base[0], pos[1] - base[1], pos[2] - base[2]];
    let b = base.map(|v| v as u32);
    let mut idx = [0usize; 8];
    let mut w = [0.0; 8];
    for k in 0..8 {
        let o = [(k & 1) as u32, ((k >> 1) & 1) as u32, ((k >> 2) & 1) as u32];
        idx[k] = hash([b[0] + o[0], b[1] + o[1], b[2] + o[2]], table_size);
        let mut wk = 1.0;
        for a in 0..3 {
            wk *= if o[a] == 1 { frac[a] } else { 1.0 - frac[a] };
        }
        w[k] = wk;
    }
    (idx, w)
}

/// Maps a contracted point (inside the radius-2 ball) to `[0, 1]^3`.
#[inline]
pub fn unit_coords(p: &Vec3) -> [f64; 3] {
    [0, 1, 2].map(|k| ((p[k] + 2.0) * 0.25).clamp(0.0, 1.0))
}

/// Features of one level at a position in that level's lattice units.
pub fn encode_level_at(cfg: &HashGridConfig, table: &[f64], level: usize, pos: [f64; 3], out: &mut [f64]) {
    let t = cfg.table_size();
    let f = cfg.features;
    let (idx, w) = lattice_corners(pos, t);
    out[..f].fill(0.0);
    for k in 0..8 {
        let row = &table[(level * t + idx[k]) * f..][..f];
        for j in 0..f {
            out[j] += w[k] * row[j];
        }
    }
}

/// Encodes a contracted point into `out[..L*F]`. When `corners` is given, the flat table
/// offsets of each level's 8 corners and their weights are recorded for backpropagation.
pub fn encode(
    cfg: &HashGridConfig,
    table: &[f64],
    p: &Vec3,
    out: &mut [f64],
    mut corners: Option<&mut [(u32, f64)]>,
) {
    let x = unit_coords(p);
    let f = cfg.features;
    let t = cfg.table_size();
    for level in 0..cfg.levels {
        let n = cfg.resolution(level);
        let (idx, w) = lattice_corners(x.map(|v| v * n), t);
        let o = &mut out[level * f..(level + 1) * f];
        o.fill(0.0);
        for k in 0..8 {
            let base = (level * t + idx[k]) * f;
            for j in 0..f {
                o[j] += w[k] * table[base + j];
            }
            if let Some(c) = corners.as_deref_mut() {
                c[level * 8 + k] = (base as u32, w[k]);
            }
        }
    }
}
