//! Scene contraction: an affine map of the domain cube onto `[-1, 1]^3` followed by the
//! radial map `q -> (2 - 1/|q|) q/|q|` outside the unit ball.

use serde::{Deserialize, Serialize};

use super::FieldError;
use crate::geometry::{Aabb, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contraction {
    pub center: [f64; 3],
    pub half: [f64; 3],
}

impl Contraction {
    pub fn new(domain: &Aabb) -> Result<Self, FieldError> {
        let half = [0, 1, 2].map(|k| 0.5 * (domain.max[k] - domain.min[k]));
        if !half.iter().all(|h| *h > 0.0 && h.is_finite()) {
            return Err(FieldError::DegenerateDomain);
        }
        let c = domain.center();
        Ok(Self {
            center: [c.x, c.y, c.z],
            half,
        })
    }

    /// The affine part: the domain maps onto `[-1, 1]^3`.
    #[inline]
    pub fn normalize(&self, p: &Vec3) -> Vec3 {
        Vec3::new(
            (p.x - self.center[0]) / self.half[0],
            (p.y - self.center[1]) / self.half[1],
            (p.z - self.center[2]) / self.half[2],
        )
    }

    #[inline]
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        contract_unit(&self.normalize(p))
    }
}

/// The radial part of the contraction; output norm stays below 2.
#[inline]
pub fn contract_unit(q: &Vec3) -> Vec3 {
    let n = q.norm();
    if n <= 1.0 {
        *q
    } else {
        q * ((2.0 - 1.0 / n) / n)
    }
}

pub fn contract(p: &Vec3, domain: &Aabb) -> Result<Vec3, FieldError> {
    Ok(Contraction::new(domain)?.apply(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cube() -> Aabb {
        Aabb::new([1.0, 2.0, 3.0], [3.0, 4.0, 5.0])
    }

    #[test]
    fn center_is_fixed_and_boundary_unchanged() {
        assert_eq!(contract(&Vec3::new(2.0, 3.0, 4.0), &cube()).unwrap(), Vec3::zeros());
        let q = Vec3::new(0.6, 0.8, 0.0);
        assert_eq!(contract_unit(&q), q);
    }

    #[test]
    fn three_maps_to_five_thirds() {
        let p = contract_unit(&Vec3::new(3.0, 0.0, 0.0));
        assert!((p.x - 5.0 / 3.0).abs() < 1e-15 && p.y == 0.0 && p.z == 0.0);
        // via the affine map: (3, 0, 0) in normalized units is center + 3 * half
        let c = contract(&Vec3::new(2.0 + 3.0, 3.0, 4.0), &cube()).unwrap();
        assert!((c.x - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_domain() {
        let flat = Aabb::new([0.0, 0.0, 0.0], [1.0, 0.0, 1.0]);
        assert!(matches!(Contraction::new(&flat), Err(FieldError::DegenerateDomain)));
    }

    #[test]
    fn continuous_across_unit_sphere() {
        let dir = Vec3::new(1.0, -2.0, 0.5).normalize();
        let a = contract_unit(&(dir * (1.0 - 1e-6)));
        let b = contract_unit(&(dir * (1.0 + 1e-6)));
        assert!((a - b).norm() < 3e-6);
    }

    proptest! {
        #[test]
        fn bounded_and_identity_inside(x in -1e6f64..1e6, y in -1e6f64..1e6, z in -1e6f64..1e6) {
            let q = Vec3::new(x, y, z);
            let c = contract_unit(&q);
            prop_assert!(c.norm() < 2.0);
            if q.norm() <= 1.0 {
                prop_assert_eq!(c, q);
            }
        }

        #[test]
        fn radial_continuity(theta in 0.0f64..3.14, phi in 0.0f64..6.28, r in 0.1f64..10.0) {
            let d = Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
            let a = contract_unit(&(d * r));
            let b = contract_unit(&(d * (r + 1e-6)));
            prop_assert!((a - b).norm() <= 1.1e-6);
        }
    }
}
