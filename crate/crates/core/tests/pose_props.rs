mod common;

use posefair::model::Point;
use posefair::pose::{classify_elbows, classify_legs, classify_view, hip_ankle_separation, knee_flexion, line_intersection, vec_angle, AngleThresholds, Vec2, ViewClass};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn v() -> impl Strategy<Value = Vec2> {
    (-100.0..100.0f64, -100.0..100.0f64)
        .prop_filter("non-zero", |(x, y)| x.hypot(*y) > 1e-3)
        .prop_map(|(x, y)| Vec2 { x, y })
}

fn p() -> impl Strategy<Value = Point> {
    (-500.0..500.0f64, -500.0..500.0f64).prop_map(|(x, y)| Point::new(x, y))
}

proptest! {
    #[test]
    fn vec_angle_is_symmetric_and_bounded(a in v(), b in v()) {
        let ab = vec_angle(a, b).unwrap();
        prop_assert!((0.0..=180.0).contains(&ab));
        prop_assert!((ab - vec_angle(b, a).unwrap()).abs() < 1e-9);
        prop_assert!(vec_angle(a, a).unwrap() < 1e-5);
    }

    #[test]
    fn knee_flexion_survives_rotation_and_scaling(h in p(), k in p(), a in p(), rot in 0.0..std::f64::consts::TAU, s in 0.1..10.0f64) {
        prop_assume!((k - h).norm() > 1.0 && (a - k).norm() > 1.0);
        let (c, sn) = (rot.cos(), rot.sin());
        let f = |q: Point| Point::new(s * (c * q.x - sn * q.y), s * (sn * q.x + c * q.y));
        let before = knee_flexion(h, k, a).unwrap();
        let after = knee_flexion(f(h), f(k), f(a)).unwrap();
        prop_assert!((before - after).abs() < 1e-6, "{} vs {}", before, after);
    }

    #[test]
    fn separation_ignores_leg_order(hl in p(), al in p(), hr in p(), ar in p()) {
        prop_assume!((al - hl).norm() > 1.0 && (ar - hr).norm() > 1.0);
        let a = hip_ankle_separation(hl, al, hr, ar).unwrap();
        let b = hip_ankle_separation(hr, ar, hl, al).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn intersection_lies_on_both_lines(p1 in p(), d1 in v(), p2 in p(), d2 in v()) {
        if let Some(i) = line_intersection(p1, d1, p2, d2) {
            for (q, d) in [(p1, d1), (p2, d2)] {
                let off = (i - q).cross(d) / d.norm();
                prop_assert!(off.abs() < 1e-6 * (1.0 + (i - q).norm()), "offset {}", off);
            }
        }
    }

    #[test]
    fn view_classes_partition_the_circle(deg in 0.0..360.0f64) {
        let view = classify_view(deg).unwrap();
        let front = deg <= 60.0 || deg >= 300.0;
        let back = (120.0..=240.0).contains(&deg);
        prop_assert_eq!(view == ViewClass::Front, front);
        prop_assert_eq!(view == ViewClass::Back, back);
        prop_assert_eq!(view == ViewClass::Lateral, !front && !back);
    }
}

#[test]
fn skeleton_labels_survive_similarity_and_mirror() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let th = AngleThresholds::default();
    for _ in 0..2000 {
        let kps = common::random_skeleton(&mut rng);
        let want = (classify_legs(&kps, &th), classify_elbows(&kps, &th));
        for moved in [
            common::transform(&kps, |x, y| (3.5 * x + 700.0, 3.5 * y - 40.0)),
            common::transform(&kps, |x, y| (0.25 * x, 0.25 * y)),
            common::mirror(&kps),
            common::mirror(&common::mirror(&kps)),
        ] {
            assert_eq!((classify_legs(&moved, &th), classify_elbows(&moved, &th)), want);
        }
    }
}

#[test]
fn out_of_range_orientations_are_rejected() {
    for deg in [-0.1, 360.0, 400.0, f64::NAN] {
        assert!(classify_view(deg).is_err(), "{deg}");
    }
}
