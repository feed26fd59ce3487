use proptest::prelude::*;
use surfex::assets::CameraPose;
use surfex::field::{AnalyticField, FieldSample, RadianceField, Shape, Texture};
use surfex::geometry::{Ray, Vec3};
use surfex::render::*;

// thicker than two sample spacings at the ranges used below
const SHELL: f64 = 0.04;

struct Empty;

impl RadianceField for Empty {
    fn query(&self, _: &Vec3, _: &Vec3) -> FieldSample {
        FieldSample::EMPTY
    }
}

fn opaque(shape: Shape) -> AnalyticField {
    AnalyticField::new(vec![shape], SHELL, 1e4)
}

fn white() -> Texture {
    Texture::constant([1.0; 3])
}

#[test]
fn empty_field_gives_infinite_depth() {
    let cfg = RenderConfig::new(0.1, 10.0, 512);
    let r = render_pixel(&Empty, &Ray::new(Vec3::zeros(), Vec3::x()), &cfg);
    assert_eq!(r.depth, f64::INFINITY);
    assert_eq!(r.status, RenderStatus::RejectedInfiniteDepth);
    assert!(r.weights.iter().all(|&w| w == 0.0));
}

#[test]
fn head_on_depth_matches_intersection_for_each_shape() {
    let cfg = RenderConfig::new(0.5, 8.5, 512);
    let tol = SHELL + cfg.spacing();
    let cases = [
        (
            opaque(Shape::Plane {
                normal: [0.0, 0.0, 1.0],
                offset: 0.0,
                bounds: None,
                albedo: white(),
            }),
            3.0,
        ),
        (
            opaque(Shape::Sphere {
                center: [0.0, 0.0, 0.0],
                radius: 1.0,
                albedo: white(),
            }),
            2.0,
        ),
        (
            opaque(Shape::Box {
                min: [-1.0, -1.0, -1.0],
                max: [1.0, 1.0, 0.5],
                albedo: white(),
            }),
            2.5,
        ),
    ];
    let ray = Ray::new(Vec3::new(0.0, 0.0, 3.0), -Vec3::z());
    for (field, expected) in cases {
        let d = render_ray_depth(&field, &ray, &cfg);
        assert!((d - expected).abs() <= tol, "{d} vs {expected}");
        let (t, _) = field.first_surface(&ray).unwrap();
        assert!((t - expected).abs() < 1e-12);
    }
}

#[test]
fn rendered_image_shows_plane_depth() {
    let field = opaque(Shape::Plane {
        normal: [0.0, 0.0, 1.0],
        offset: 0.0,
        bounds: None,
        albedo: Texture::constant([0.2, 0.4, 0.6]),
    });
    let pose = CameraPose::look_at("c", Vec3::new(0.0, 0.0, 2.0), Vec3::zeros(), Vec3::y(), 40.0, 16, 12).unwrap();
    let cfg = RenderConfig::new(0.5, 4.5, 256);
    let (img, depth) = render_image(&field, &pose, &cfg);
    assert_eq!((img.width, img.height, depth.len()), (16, 12, 16 * 12));
    for y in 0..12 {
        for x in 0..16 {
            let ray = pose.pixel_center_ray(x, y);
            let t = field.first_surface(&ray).unwrap().0;
            assert!((depth[(y * 16 + x) as usize] - t).abs() <= SHELL + cfg.spacing());
            let c = img.rgb(x, y);
            assert!((c[2] - 0.6).abs() < 1e-3);
        }
    }
}

fn weights_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..48).prop_flat_map(|n| (proptest::collection::vec(0.0f64..1.0, n), proptest::collection::vec(prop::array::uniform3(0.0f64..1.0), n)))
        .prop_map(|(w, c)| {
            let s: f64 = w.iter().sum::<f64>().max(1e-9);
            let scale = 0.999 / s;
            (w.into_iter().map(|x| x * scale).collect(), c.into_iter().flatten().collect())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn compositing_weights_are_a_sub_probability(sigma in proptest::collection::vec(0.0f64..1e5, 1..128), step in 1e-5f64..0.5) {
        let w = compositing_weights(&sigma, &vec![step; sigma.len()]);
        prop_assert!(w.iter().all(|&x| x >= 0.0));
        prop_assert!(w.iter().sum::<f64>() <= 1.0);
    }

    #[test]
    fn depth_is_first_index_past_half(sigma in proptest::collection::vec(0.0f64..50.0, 2..64)) {
        let n = sigma.len();
        let w = compositing_weights(&sigma, &vec![0.1; n]);
        let t: Vec<f64> = (0..n).map(|k| 0.05 + 0.1 * k as f64).collect();
        let d = render_depth(&w, &t);
        let mut acc = 0.0;
        let mut expected = f64::INFINITY;
        for (wi, ti) in w.iter().zip(&t) {
            acc += wi;
            if acc > 0.5 {
                expected = *ti;
                break;
            }
        }
        prop_assert_eq!(d, expected);
    }

    #[test]
    fn csd_equals_standard_when_window_holds_all_weight((w, flat) in weights_strategy(), d in 1.0f64..10.0, spread in 0.0f64..0.9) {
        let n = w.len();
        let colors: Vec<[f64; 3]> = flat.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
        let eps4 = 0.0025;
        // every sample inside the window
        let depths: Vec<f64> = (0..n).map(|k| d * (1.0 + eps4 * spread * (2.0 * k as f64 / n as f64 - 1.0))).collect();
        let csd = render_color_csd(&w, &colors, &depths, d, eps4);
        let std = render_color_standard(&w, &colors);
        if w.iter().sum::<f64>() > 0.0 {
            let c = csd.unwrap();
            for k in 0..3 {
                prop_assert!((c[k] - std[k]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn empty_window_is_rejected((w, flat) in weights_strategy(), d in 1.0f64..10.0) {
        let colors: Vec<[f64; 3]> = flat.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
        let depths: Vec<f64> = (0..w.len()).map(|k| 2.0 * d + k as f64).collect();
        prop_assert_eq!(render_color_csd(&w, &colors, &depths, d, 0.0025), None);
    }
}
