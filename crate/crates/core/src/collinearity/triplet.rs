//! Pixel triplets `(q0, q1, q2)` with `q1` the exact midpoint of an edge-free segment.

use rand::Rng;

use super::EdgeMap;

pub const DIRECTIONS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PixelTriplet {
    pub q: [[u32; 2]; 3],
    pub image: usize,
    /// False when `q1` fell on an edge or no edge-free segment exists; the three pixels
    /// are then unrelated uniform draws (or a single pixel repeated).
    pub candidate: bool,
}

/// Integer pixels on the Bresenham line from `a` to `b`, both endpoints included.
pub fn bresenham(a: [i64; 2], b: [i64; 2]) -> Vec<[i64; 2]> {
    let (mut x, mut y) = (a[0], a[1]);
    let dx = (b[0] - a[0]).abs();
    let dy = -(b[1] - a[1]).abs();
    let sx = if a[0] < b[0] { 1 } else { -1 };
    let sy = if a[1] < b[1] { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy + 1) as usize);
    loop {
        out.push([x, y]);
        if x == b[0] && y == b[1] {
            return out;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Integer half-vectors `round(s (cos t, sin t))` for `s = 1, 2, ...` with norm at most
/// `max_half`, one list per direction `t = k pi / 16`.
pub fn direction_steps(max_half: f64) -> Vec<Vec<[i64; 2]>> {
    (0..DIRECTIONS)
        .map(|k| {
            let t = k as f64 * std::f64::consts::PI / DIRECTIONS as f64;
            let mut steps: Vec<[i64; 2]> = Vec::new();
            for s in 1.. {
                let v = [(s as f64 * t.cos()).round() as i64, (s as f64 * t.sin()).round() as i64];
                let n = ((v[0] * v[0] + v[1] * v[1]) as f64).sqrt();
                if n > max_half + 1e-9 {
                    break;
                }
                if steps.last() != Some(&v) {
                    steps.push(v);
                }
            }
            steps
        })
        .collect()
}

fn segment_is_clear(edges: &EdgeMap, c: [i64; 2], v: [i64; 2]) -> bool {
    let (w, h) = (edges.width as i64, edges.height as i64);
    let a = [c[0] - v[0], c[1] - v[1]];
    let b = [c[0] + v[0], c[1] + v[1]];
    let inside = |p: [i64; 2]| p[0] >= 0 && p[1] >= 0 && p[0] < w && p[1] < h;
    if !inside(a) || !inside(b) {
        return false;
    }
    bresenham(a, b).into_iter().all(|p| !edges.get(p[0] as u32, p[1] as u32))
}

/// Longest edge-free segment centered at `c` over the 16 directions; ties go to the
/// lower direction index. Returns the half-vector.
pub fn longest_clear_segment(edges: &EdgeMap, c: [u32; 2], steps: &[Vec<[i64; 2]>]) -> Option<[i64; 2]> {
    let c = [c[0] as i64, c[1] as i64];
    let mut best: Option<([i64; 2], i64)> = None;
    for dir in steps {
        let mut reach = None;
        for &v in dir {
            if !segment_is_clear(edges, c, v) {
                break;
            }
            reach = Some(v);
        }
        if let Some(v) = reach {
            let n2 = v[0] * v[0] + v[1] * v[1];
            if best.is_none_or(|(_, b)| n2 > b) {
                best = Some((v, n2));
            }
        }
    }
    best.map(|b| b.0)
}

fn uniform_pixel<R: Rng>(rng: &mut R, w: u32, h: u32) -> [u32; 2] {
    [rng.random_range(0..w), rng.random_range(0..h)]
}

/// Draws `q1` uniformly. On an edge, `q0` and `q2` are independent uniform pixels;
/// otherwise they are the endpoints of the longest edge-free segment centered at `q1`.
pub fn sample_triplet<R: Rng>(edges: &EdgeMap, image: usize, rng: &mut R, max_segment: u32) -> PixelTriplet {
    let steps = direction_steps(max_segment as f64 / 2.0);
    sample_triplet_with(edges, image, rng, &steps)
}

/// [`sample_triplet`] with precomputed [`direction_steps`].
pub fn sample_triplet_with<R: Rng>(edges: &EdgeMap, image: usize, rng: &mut R, steps: &[Vec<[i64; 2]>]) -> PixelTriplet {
    let (w, h) = (edges.width, edges.height);
    let q1 = uniform_pixel(rng, w, h);
    if edges.get(q1[0], q1[1]) {
        let q0 = uniform_pixel(rng, w, h);
        let q2 = uniform_pixel(rng, w, h);
        return PixelTriplet {
            q: [q0, q1, q2],
            image,
            candidate: false,
        };
    }
    match longest_clear_segment(edges, q1, steps) {
        Some(v) => {
            let c = [q1[0] as i64, q1[1] as i64];
            PixelTriplet {
                q: [
                    [(c[0] - v[0]) as u32, (c[1] - v[1]) as u32],
                    q1,
                    [(c[0] + v[0]) as u32, (c[1] + v[1]) as u32],
                ],
                image,
                candidate: true,
            }
        }
        None => PixelTriplet {
            q: [q1; 3],
            image,
            candidate: false,
        },
    }
}
