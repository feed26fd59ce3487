use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surfex::metrics::{chamfer, evaluate, fscore, hausdorff, nearest_distances};

fn brute_nearest(a: &[[f64; 3]], b: &[[f64; 3]]) -> Vec<f64> {
    a.iter()
        .map(|p| {
            b.iter()
                .map(|q| {
                    let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
                    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
                })
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect()
}

fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 3]> {
    (0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-0.2..0.2)]).collect()
}

#[test]
fn kd_tree_matches_brute_force_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let a = random_cloud(&mut rng, 1000);
        let b = random_cloud(&mut rng, 1000);
        assert_eq!(nearest_distances(&a, &b).unwrap(), brute_nearest(&a, &b));
    }
    // duplicates and collinear points
    let a: Vec<[f64; 3]> = (0..300).map(|i| [(i % 7) as f64, 0.0, 0.0]).collect();
    assert_eq!(nearest_distances(&a, &a[..50]).unwrap(), brute_nearest(&a, &a[..50]));
}

#[test]
fn shifted_grid_distances() {
    // pitch 0.5 over the unit square, so every nearest neighbor is the shifted twin
    let coarse: Vec<[f64; 3]> = (0..3).flat_map(|i| (0..3).map(move |j| [i as f64 * 0.5, j as f64 * 0.5, 0.0])).collect();
    let shifted: Vec<[f64; 3]> = coarse.iter().map(|p| [p[0] + 0.1, p[1], p[2]]).collect();
    assert!((chamfer(&coarse, &shifted).unwrap() - 0.1).abs() < 1e-9);
    assert!((hausdorff(&coarse, &shifted).unwrap() - 0.1).abs() < 1e-9);
    assert_eq!(fscore(&coarse, &coarse, 0.05).unwrap(), 100.0);
}

fn cloud() -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec(prop::array::uniform3(-5.0..5.0f64), 1..60)
}

proptest! {
    #[test]
    fn symmetric_and_ordered(a in cloud(), b in cloud(), t in 0.01..3.0f64) {
        let ab = evaluate(&a, &b, t).unwrap();
        let ba = evaluate(&b, &a, t).unwrap();
        prop_assert!((ab.chamfer - ba.chamfer).abs() < 1e-12);
        prop_assert_eq!(ab.hausdorff, ba.hausdorff);
        prop_assert!((ab.fscore - ba.fscore).abs() < 1e-9);
        prop_assert!(ab.chamfer <= ab.hausdorff + 1e-12);
        prop_assert!((0.0..=100.0).contains(&ab.fscore));
    }

    #[test]
    fn rigid_invariance(a in cloud(), b in cloud(), yaw in 0.0..6.3f64, shift in prop::array::uniform3(-10.0..10.0f64)) {
        let (s, c) = yaw.sin_cos();
        let m = |p: &[f64; 3]| [c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1], p[2] + shift[2]];
        let ta: Vec<[f64; 3]> = a.iter().map(m).collect();
        let tb: Vec<[f64; 3]> = b.iter().map(m).collect();
        prop_assert!((chamfer(&a, &b).unwrap() - chamfer(&ta, &tb).unwrap()).abs() < 1e-9);
        prop_assert!((hausdorff(&a, &b).unwrap() - hausdorff(&ta, &tb).unwrap()).abs() < 1e-9);
    }
}
