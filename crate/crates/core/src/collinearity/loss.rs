//! Expected midpoint depth of three rays from one center and the collinearity loss
//! `L = chi * omega * tanh(tau |d1 - d1_hat|)`.

use serde::{Deserialize, Serialize};

use super::CollinearityError;
use crate::geometry::Vec3;

pub const EPS_DENOM: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollinearityParams {
    pub tau: f64,
    pub gamma: f64,
    pub eps2: f64,
    /// Longest allowed `|q0 - q2|`, pixels.
    pub max_segment: u32,
}

impl Default for CollinearityParams {
    fn default() -> Self {
        Self {
            tau: 4.0,
            gamma: 0.1,
            eps2: 0.0025,
            max_segment: 40,
        }
    }
}

/// `d1_hat` together with its partials in `d0` and `d2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Midpoint {
    pub depth: f64,
    pub d_d0: f64,
    pub d_d2: f64,
}

/// Depth along `u1` of the point on the segment between `d0 u0` and `d2 u2`:
/// `d0 d2 |u0 x u2| / (d0 |u0 x u1| + d2 |u1 x u2|)`.
pub fn expected_midpoint(d0: f64, d2: f64, u: [&Vec3; 3]) -> Result<Midpoint, CollinearityError> {
    let a = u[0].cross(u[2]).norm();
    let b = u[0].cross(u[1]).norm();
    let c = u[1].cross(u[2]).norm();
    let den = d0 * b + d2 * c;
    if !(den > EPS_DENOM) {
        return Err(CollinearityError::DegenerateDirections);
    }
    let den2 = den * den;
    Ok(Midpoint {
        depth: d0 * d2 * a / den,
        d_d0: d2 * d2 * a * c / den2,
        d_d2: d0 * d0 * a * b / den2,
    })
}

pub fn expected_midpoint_depth(d0: f64, d2: f64, u0: &Vec3, u1: &Vec3, u2: &Vec3) -> Result<f64, CollinearityError> {
    expected_midpoint(d0, d2, [u0, u1, u2]).map(|m| m.depth)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollinearityLoss {
    pub value: f64,
    /// Partials in `d0`, `d1`, `d2`; the indicator and the color weight are constants.
    pub grad: [f64; 3],
    pub chi: f64,
    pub omega: f64,
    pub delta: f64,
    pub degenerate: bool,
}

impl CollinearityLoss {
    const ZERO: Self = Self {
        value: 0.0,
        grad: [0.0; 3],
        chi: 0.0,
        omega: 0.0,
        delta: 0.0,
        degenerate: true,
    };
}

/// Color similarity `exp(-(|c1 - c0|^2 + |c2 - c1|^2) / (2 gamma^2))`.
pub fn color_weight(c: &[[f64; 3]; 3], gamma: f64) -> f64 {
    let sq = |a: &[f64; 3], b: &[f64; 3]| (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>();
    (-(sq(&c[1], &c[0]) + sq(&c[2], &c[1])) / (2.0 * gamma * gamma)).exp()
}

/// Loss for depths `d`, ground-truth colors `c` and unit ray directions `u` sharing one
/// center. Degenerate directions give a zero loss with zero partials.
pub fn collinearity_loss(d: [f64; 3], c: &[[f64; 3]; 3], u: [&Vec3; 3], params: &CollinearityParams) -> CollinearityLoss {
    let Ok(mid) = expected_midpoint(d[0], d[2], u) else {
        return CollinearityLoss::ZERO;
    };
    let delta = d[1] - mid.depth;
    let min_d = d[0].min(d[1]).min(d[2]);
    let chi = if delta.abs() <= params.eps2 * min_d { 1.0 } else { 0.0 };
    let omega = color_weight(c, params.gamma);
    let rho = (params.tau * delta.abs()).tanh();
    let value = chi * omega * rho;
    // subgradient 0 at delta = 0
    let sign = if delta > 0.0 {
        1.0
    } else if delta < 0.0 {
        -1.0
    } else {
        0.0
    };
    let d_delta = chi * omega * params.tau * (1.0 - rho * rho) * sign;
    CollinearityLoss {
        value,
        grad: [-d_delta * mid.d_d0, d_delta, -d_delta * mid.d_d2],
        chi,
        omega,
        delta,
        degenerate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir(deg: f64) -> Vec3 {
        let r = deg.to_radians();
        Vec3::new(r.sin(), 0.0, r.cos())
    }

    #[test]
    fn symmetric_case_is_cosine() {
        let d = expected_midpoint_depth(1.0, 1.0, &dir(-30.0), &dir(0.0), &dir(30.0)).unwrap();
        assert!((d - 30f64.to_radians().cos()).abs() < 1e-12);
    }

    #[test]
    fn identical_directions_are_degenerate() {
        let u = Vec3::z();
        assert_eq!(
            expected_midpoint_depth(1.0, 2.0, &u, &u, &u),
            Err(CollinearityError::DegenerateDirections)
        );
        let l = collinearity_loss([1.0; 3], &[[0.5; 3]; 3], [&u, &u, &u], &CollinearityParams::default());
        assert!(l.degenerate && l.value == 0.0 && l.grad == [0.0; 3]);
    }

    #[test]
    fn hand_evaluated_loss_values() {
        let (u0, u1, u2) = (dir(-10.0), dir(0.0), dir(10.0));
        let p = CollinearityParams::default();
        let c = [[0.3, 0.6, 0.9]; 3];
        let mid = expected_midpoint_depth(1.0, 1.0, &u0, &u1, &u2).unwrap();
        // on the line
        let l = collinearity_loss([1.0, mid, 1.0], &c, [&u0, &u1, &u2], &p);
        assert_eq!(l.value, 0.0);
        assert_eq!(l.grad, [0.0; 3]);
        // far off the line: indicator is zero
        let l = collinearity_loss([1.0, mid + 0.1, 1.0], &c, [&u0, &u1, &u2], &p);
        assert_eq!(l.value, 0.0);
        // within the threshold: tanh(4 * 0.002)
        let l = collinearity_loss([1.0, mid + 0.002, 1.0], &c, [&u0, &u1, &u2], &p);
        assert!((l.value - 0.008f64.tanh()).abs() < 1e-12);
        assert!((l.value - 0.0079998).abs() < 1e-7);
    }

    #[test]
    fn omega_symmetry() {
        let c = [[0.1, 0.2, 0.3], [0.4, 0.4, 0.4], [0.9, 0.0, 0.5]];
        let swapped = [c[2], c[1], c[0]];
        assert_eq!(color_weight(&c, 0.1), color_weight(&swapped, 0.1));
        assert_eq!(color_weight(&[[0.7; 3]; 3], 0.1), 1.0);
    }
}
