mod common;

use common::{central_diff, kfiou2, kfiou3, polygon_iou};
use kfiou::gaussian::{box2d_to_gaussian, box3d_to_gaussian};
use kfiou::geometry::{skew_iou_2d, RotatedBox2D, RotatedBox3D};
use kfiou::losses::{self, LossConfig};
use proptest::prelude::*;

fn box2() -> impl Strategy<Value = [f64; 5]> {
    (-30.0..30.0, -30.0..30.0, 0.5..60.0, 0.5..60.0, -180.0..180.0).prop_map(|(x, y, w, h, t)| [x, y, w, h, t])
}

fn box3() -> impl Strategy<Value = [f64; 7]> {
    (box2(), -5.0..5.0, 0.5..20.0).prop_map(|(b, z, l)| [b[0], b[1], z, b[2], b[3], l, b[4]])
}

proptest! {
    #[test]
    fn kfiou_2d_matches_reference(a in box2(), b in box2()) {
        let (ga, gb) = (
            box2d_to_gaussian(&RotatedBox2D::from_params(a).unwrap()).unwrap(),
            box2d_to_gaussian(&RotatedBox2D::from_params(b).unwrap()).unwrap(),
        );
        let k = losses::kfiou(&ga, &gb).unwrap();
        prop_assert!((k - kfiou2(&a, &b)).abs() <= 1e-9 * k.max(1e-3));
    }

    #[test]
    fn kfiou_3d_matches_reference(a in box3(), b in box3()) {
        let (ga, gb) = (
            box3d_to_gaussian(&RotatedBox3D::from_params(a).unwrap()).unwrap(),
            box3d_to_gaussian(&RotatedBox3D::from_params(b).unwrap()).unwrap(),
        );
        let k = losses::kfiou(&ga, &gb).unwrap();
        prop_assert!((k - kfiou3(&a, &b)).abs() <= 1e-9 * k.max(1e-3));
    }

    #[test]
    fn skew_iou_matches_reference_clip(a in box2(), b in box2()) {
        let exact = skew_iou_2d(&RotatedBox2D::from_params(a).unwrap(), &RotatedBox2D::from_params(b).unwrap());
        prop_assert!((exact - polygon_iou(&a, &b)).abs() <= 1e-9);
    }

    #[test]
    fn analytic_gradient_matches_reference_differences(p in box2(), g in box2()) {
        let (pred, gt) = (RotatedBox2D::from_params(p).unwrap(), RotatedBox2D::from_params(g).unwrap());
        let cfg = LossConfig::default();
        let analytic = kfiou::diff::grad_kf_loss_2d(&pred, &gt, &cfg).unwrap();
        let f = |x: &[f64]| {
            let b = RotatedBox2D::new(x[0], x[1], x[2], x[3], x[4]).unwrap();
            losses::regression_loss(&b, &gt, &gt, &cfg).unwrap()
        };
        let numeric = central_diff(f, &p, 1e-5);
        for (a, n) in analytic.iter().zip(&numeric) {
            prop_assert!((a - n).abs() / 1f64.max(a.abs()).max(n.abs()) < 1e-4, "{analytic:?} vs {numeric:?}");
        }
    }
}
