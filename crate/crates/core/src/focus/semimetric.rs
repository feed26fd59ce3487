use rayon::prelude::*;

use super::CausticPoint;

/// `max(|(x_a; t_a) - (x_b; t_b)| - (t_a + t_b) sin(alpha), 0)` over the 4D points.
pub fn frustum_semimetric(a: &CausticPoint, b: &CausticPoint, alpha_rad: f64) -> f64 {
    let dx = a.position - b.position;
    let dt = a.depth - b.depth;
    let d = (dx.norm_squared() + dt * dt).sqrt();
    (d - (a.depth + b.depth) * alpha_rad.sin()).max(0.0)
}

/// Symmetric pairwise matrix, row-major, zero diagonal.
pub fn distance_matrix(points: &[CausticPoint], alpha_rad: f64) -> Vec<f64> {
    let n = points.len();
    let mut m = vec![0.0; n * n];
    m.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
        for j in 0..n {
            row[j] = if i == j { 0.0 } else { frustum_semimetric(&points[i], &points[j], alpha_rad) };
        }
    });
    m
}
