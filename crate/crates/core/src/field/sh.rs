//! Real spherical harmonics up to degree 4.

use super::FieldError;
use crate::geometry::Vec3;

pub const MAX_DEGREE: usize = 4;

pub fn sh_len(degree: usize) -> usize {
    (degree + 1) * (degree + 1)
}

/// Basis values ordered by band, `m = -l..=l` within each band.
pub fn sh_encode(u: &Vec3, degree: usize) -> Result<Vec<f64>, FieldError> {
    let n = u.norm();
    if (n - 1.0).abs() > 1e-6 {
        return Err(FieldError::NonUnitDirection(n));
    }
    assert!(degree <= MAX_DEGREE, "spherical harmonics supported up to degree {MAX_DEGREE}");
    let mut out = vec![0.0; sh_len(degree)];
    sh_fill(u, degree, &mut out);
    Ok(out)
}

/// Writes `sh_len(degree)` values into `out` without validation.
pub fn sh_fill(u: &Vec3, degree: usize, out: &mut [f64]) {
    let (x, y, z) = (u.x, u.y, u.z);
    out[0] = 0.282_094_791_773_878_14;
    if degree == 0 {
        return;
    }
    out[1] = -0.488_602_511_902_919_87 * y;
    out[2] = 0.488_602_511_902_919_87 * z;
    out[3] = -0.488_602_511_902_919_87 * x;
    if degree == 1 {
        return;
    }
    let (x2, y2, z2) = (x * x, y * y, z * z);
    let (xy, yz, xz) = (x * y, y * z, x * z);
    out[4] = 1.092_548_430_592_079_2 * xy;
    out[5] = -1.092_548_430_592_079_2 * yz;
    out[6] = 0.946_174_695_757_559_97 * z2 - 0.315_391_565_252_519_99;
    out[7] = -1.092_548_430_592_079_2 * xz;
    out[8] = 0.546_274_215_296_039_59 * (x2 - y2);
    if degree == 2 {
        return;
    }
    out[9] = 0.590_043_589_926_643_52 * y * (-3.0 * x2 + y2);
    out[10] = 2.890_611_442_640_553_8 * xy * z;
    out[11] = 0.457_045_799_464_465_72 * y * (1.0 - 5.0 * z2);
    out[12] = 0.373_176_332_590_115_4 * z * (5.0 * z2 - 3.0);
    out[13] = 0.457_045_799_464_465_72 * x * (1.0 - 5.0 * z2);
    out[14] = 1.445_305_721_320_276_9 * z * (x2 - y2);
    out[15] = 0.590_043_589_926_643_52 * x * (-x2 + 3.0 * y2);
    if degree == 3 {
        return;
    }
    out[16] = 2.503_342_941_796_704_6 * xy * (x2 - y2);
    out[17] = 1.770_130_769_779_930_4 * yz * (-3.0 * x2 + y2);
    out[18] = 0.946_174_695_757_560_08 * xy * (7.0 * z2 - 1.0);
    out[19] = 0.669_046_543_557_289_21 * yz * (7.0 * z2 - 3.0);
    out[20] = -3.173_566_407_456_129_4 * z2 + 3.702_494_142_032_150_7 * z2 * z2 + 0.317_356_640_745_612_93;
    out[21] = 0.669_046_543_557_289_21 * xz * (7.0 * z2 - 3.0);
    out[22] = 0.473_087_347_878_780_04 * (x2 - y2) * (7.0 * z2 - 1.0);
    out[23] = 1.770_130_769_779_930_4 * xz * (-x2 + 3.0 * y2);
    out[24] = -3.755_014_412_695_056_9 * x2 * y2
        + 0.625_835_735_449_176_14 * x2 * x2
        + 0.625_835_735_449_176_14 * y2 * y2;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_zero_constant() {
        let v = sh_encode(&Vec3::new(0.0, 1.0, 0.0), 0).unwrap();
        assert!((v[0] - 1.0 / (2.0 * std::f64::consts::PI.sqrt())).abs() < 1e-12);
        assert!((v[0] - 0.2820947918).abs() < 1e-10);
    }

    #[test]
    fn axis_direction_excites_only_zonal_band_one() {
        let v = sh_encode(&Vec3::z(), 1).unwrap();
        assert_eq!(v[1], 0.0);
        assert_eq!(v[3], 0.0);
        assert!(v[2] != 0.0);
    }

    #[test]
    fn band_power_is_rotation_invariant() {
        let a = sh_encode(&Vec3::x(), 4).unwrap();
        let b = sh_encode(&Vec3::z(), 4).unwrap();
        for l in 0..=4 {
            let band = l * l..(l + 1) * (l + 1);
            let pa: f64 = a[band.clone()].iter().map(|v| v * v).sum();
            let pb: f64 = b[band].iter().map(|v| v * v).sum();
            assert!((pa - pb).abs() < 1e-12, "band {l}: {pa} vs {pb}");
        }
    }

    #[test]
    fn non_unit_direction_rejected() {
        assert!(matches!(
            sh_encode(&Vec3::new(1.0, 1.0, 0.0), 2),
            Err(FieldError::NonUnitDirection(_))
        ));
    }

    /// Gauss-Legendre nodes and weights by Newton iteration on P_n.
    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                loop {
                    let (mut p0, mut p1) = (1.0, x);
                    for k in 2..=n {
                        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let dx = p1 / dp;
                    x -= dx;
                    if dx.abs() < 1e-15 {
                        let w = 2.0 / ((1.0 - x * x) * dp * dp);
                        return (x, w);
                    }
                }
            })
            .collect()
    }

    #[test]
    fn orthonormal_under_exact_quadrature() {
        let nodes = gauss_legendre(12);
        let nphi = 24;
        let m = sh_len(4);
        let mut gram = vec![0.0; m * m];
        for &(z, wz) in &nodes {
            let s = (1.0 - z * z).sqrt();
            for j in 0..nphi {
                let phi = 2.0 * std::f64::consts::PI * j as f64 / nphi as f64;
                let u = Vec3::new(s * phi.cos(), s * phi.sin(), z);
                let y = sh_encode(&u, 4).unwrap();
                let w = wz * 2.0 * std::f64::consts::PI / nphi as f64;
                for a in 0..m {
                    for b in 0..m {
                        gram[a * m + b] += w * y[a] * y[b];
                    }
                }
            }
        }
        for a in 0..m {
            for b in 0..m {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((gram[a * m + b] - expect).abs() < 1e-9, "({a},{b}) = {}", gram[a * m + b]);
            }
        }
    }
}
