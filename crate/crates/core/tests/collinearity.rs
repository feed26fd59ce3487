use std::path::Path;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use surfex::assets::{load_image, ImageBuffer};
use surfex::collinearity::{bresenham, collinearity_loss, detect_edges, expected_midpoint_depth, sample_triplet, CannyParams, CollinearityParams, EdgeMap};
use surfex::geometry::Vec3;

fn data(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn near_any(map: &EdgeMap, x: u32, y: u32) -> bool {
    let (x, y) = (x as i64, y as i64);
    (-1..=1).any(|dy| {
        (-1..=1).any(|dx| {
            let (nx, ny) = (x + dx, y + dy);
            nx >= 0 && ny >= 0 && nx < map.width as i64 && ny < map.height as i64 && map.get(nx as u32, ny as u32)
        })
    })
}

#[test]
fn checkerboard_edges_match_golden_within_one_pixel() {
    let img = load_image(&data("checker64.pgm")).unwrap();
    let golden_img = load_image(&data("checker64_canny.pgm")).unwrap();
    let golden = EdgeMap {
        width: golden_img.width,
        height: golden_img.height,
        mask: golden_img.data.iter().map(|&v| v > 0.5).collect(),
    };
    let ours = detect_edges(&img, &CannyParams::default()).unwrap();
    assert!(ours.count() > 0);
    // borders are handled differently by the two implementations
    let margin = 3;
    for y in margin..img.height - margin {
        for x in margin..img.width - margin {
            if ours.get(x, y) {
                assert!(near_any(&golden, x, y), "extra edge at ({x}, {y})");
                // within two pixels of a block boundary (corners spread slightly)
                let off = |v: u32| (v % 8).min(8 - v % 8);
                assert!(off(x) <= 2 || off(y) <= 2, "({x}, {y})");
            }
            if golden.get(x, y) {
                assert!(near_any(&ours, x, y), "missing edge at ({x}, {y})");
            }
        }
    }
}

#[test]
fn step_edge_is_one_pixel_wide() {
    let (w, h) = (32u32, 16u32);
    let data: Vec<f64> = (0..w * h).map(|i| if i % w < 16 { 0.0 } else { 1.0 }).collect();
    let img = ImageBuffer::new(w, h, 1, data).unwrap();
    let e = detect_edges(&img, &CannyParams::default()).unwrap();
    for y in 2..h - 2 {
        let xs: Vec<u32> = (0..w).filter(|&x| e.get(x, y)).collect();
        assert_eq!(xs.len(), 1, "row {y}: {xs:?}");
        assert!((xs[0] as i64 - 15).abs() <= 1);
    }
}

#[test]
fn constant_image_has_no_edges() {
    let img = ImageBuffer::filled(20, 20, 3, 0.4);
    assert_eq!(detect_edges(&img, &CannyParams::default()).unwrap().count(), 0);
}

#[test]
fn center_pixel_is_uniform_on_edge_free_image() {
    let (w, h) = (10u32, 10u32);
    let edges = EdgeMap::empty(w, h);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = 100_000;
    let mut counts = vec![0u64; (w * h) as usize];
    for _ in 0..draws {
        let t = sample_triplet(&edges, 0, &mut rng, 40);
        counts[(t.q[1][1] * w + t.q[1][0]) as usize] += 1;
    }
    let expected = draws as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let critical = ChiSquared::new((counts.len() - 1) as f64).unwrap().inverse_cdf(0.999);
    assert!(stat < critical, "chi-square {stat} >= {critical}");
}

#[test]
fn full_length_segment_away_from_borders() {
    let edges = EdgeMap::empty(64, 64);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut seen = 0;
    for _ in 0..2000 {
        let t = sample_triplet(&edges, 0, &mut rng, 40);
        let [x, y] = t.q[1];
        if (20..44).contains(&x) && (20..44).contains(&y) {
            seen += 1;
            assert!(t.candidate);
            let d = [t.q[2][0] as i64 - t.q[0][0] as i64, t.q[2][1] as i64 - t.q[0][1] as i64];
            let len = ((d[0] * d[0] + d[1] * d[1]) as f64).sqrt();
            assert!((len - 40.0).abs() < 1e-9, "{len}");
        }
    }
    assert!(seen > 100);
}

fn random_edges(w: u32, h: u32, density: f64, seed: u64) -> EdgeMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    EdgeMap {
        width: w,
        height: h,
        mask: (0..w * h).map(|_| rng.random::<f64>() < density).collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn candidate_segments_cross_no_edges(seed in 0u64..1000, density in 0.0f64..0.2) {
        let edges = random_edges(48, 40, density, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        for _ in 0..50 {
            let t = sample_triplet(&edges, 0, &mut rng, 40);
            if t.candidate {
                let q = t.q.map(|p| [p[0] as i64, p[1] as i64]);
                prop_assert_eq!(q[1][0] * 2, q[0][0] + q[2][0]);
                prop_assert_eq!(q[1][1] * 2, q[0][1] + q[2][1]);
                for p in bresenham(q[0], q[2]) {
                    prop_assert!(!edges.get(p[0] as u32, p[1] as u32));
                }
            } else {
                for p in t.q {
                    prop_assert!(p[0] < 48 && p[1] < 40);
                }
            }
        }
    }

    #[test]
    fn loss_is_bounded(
        d in prop::array::uniform3(0.5f64..20.0),
        c in prop::array::uniform3(prop::array::uniform3(0.0f64..1.0)),
        a0 in -0.5f64..-0.01, a2 in 0.01f64..0.5,
    ) {
        let u0 = Vec3::new(a0.sin(), 0.0, a0.cos());
        let u1 = Vec3::z();
        let u2 = Vec3::new(a2.sin(), 0.1 * a2, a2.cos()).normalize();
        let l = collinearity_loss(d, &c, [&u0, &u1, &u2], &CollinearityParams::default());
        prop_assert!((0.0..=1.0).contains(&l.value));
    }

    #[test]
    fn collinear_points_give_zero_loss_at_any_scale(
        p0 in prop::array::uniform3(-1.0f64..1.0),
        p2 in prop::array::uniform3(-1.0f64..1.0),
        s in 0.2f64..0.8,
        scale in 0.1f64..10.0,
    ) {
        let a = Vec3::from(p0) + Vec3::new(0.0, 0.0, 5.0);
        let b = Vec3::from(p2) + Vec3::new(0.0, 0.0, 5.0);
        let m = a + (b - a) * s;
        prop_assume!((b - a).norm() > 0.1);
        let pts = [a * scale, m * scale, b * scale];
        let d = pts.map(|p| p.norm());
        let u = pts.map(|p| p.normalize());
        let mid = expected_midpoint_depth(d[0], d[2], &u[0], &u[1], &u[2]).unwrap();
        prop_assert!((mid - d[1]).abs() <= 1e-9 * d[1]);
        let l = collinearity_loss([d[0], mid, d[2]], &[[0.5; 3]; 3], [&u[0], &u[1], &u[2]], &CollinearityParams::default());
        prop_assert_eq!(l.value, 0.0);
    }
}
