use pinchfold::canard::{grazing_residual, hermite_transform, hermite_transform_inv};
use pinchfold::continuation::{eval_regularized, fold_chart_x, polyline_intersections, RegularizedParams};
use pinchfold::filippov::hausdorff_distance;
use pinchfold::specfun::kummer_1f1;
use pinchfold::FoldedNodeParams;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn kummer_transformation(a in -5.0f64..5.0, b in 0.3f64..4.0, x in -8.0f64..8.0) {
        let lhs = kummer_1f1(a, b, x).unwrap();
        let rhs = x.exp() * kummer_1f1(b - a, b, -x).unwrap();
        let scale = lhs.abs().max(rhs.abs()).max(1e-3);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * scale, "{lhs} vs {rhs}");
    }

    #[test]
    fn regularized_field_is_reversible(
        mu in 0.02f64..0.98, eps in 0.01f64..0.49, k in 1.0f64..1e4,
        u in -1.0f64..1.0, y in -3.0f64..3.0, z in -3.0f64..3.0,
    ) {
        let rp = RegularizedParams::new(FoldedNodeParams::new(mu, eps).unwrap(), k).unwrap();
        let f = eval_regularized(&rp, [u, y, z]);
        let g = eval_regularized(&rp, [u, -y, -z]);
        prop_assert!((f[0] + g[0]).abs() <= 1e-12 * f[0].abs().max(1.0));
        prop_assert_eq!(f[2], g[2]);
        prop_assert_eq!(f[1], g[1]);
        prop_assert_eq!(fold_chart_x(&rp, u, z), fold_chart_x(&rp, u, -z));
    }

    #[test]
    fn hermite_transform_round_trip(mu in 0.02f64..0.98, eps in 0.01f64..0.49, y in -4.0f64..4.0, z in -4.0f64..4.0) {
        let p = FoldedNodeParams::new(mu, eps).unwrap();
        let (tau, zeta) = hermite_transform(&p, y, z);
        let (y2, z2) = hermite_transform_inv(&p, tau, zeta);
        prop_assert!((y2 - y).abs() <= 1e-12 * y.abs().max(1.0));
        prop_assert!((z2 - z).abs() <= 1e-12 * z.abs().max(1.0));
    }

    #[test]
    fn grazing_residual_is_even_in_time(t in 0.1f64..2.5, c in -1.0f64..1.0) {
        let p = FoldedNodeParams::new(1.0 / 8.5, 0.05).unwrap();
        let a = grazing_residual(&p, t, c).unwrap();
        let b = grazing_residual(&p, -t, c).unwrap();
        prop_assert!((a[0] - b[0]).abs() <= 1e-12 * a[0].abs().max(1.0));
        prop_assert!((a[1] + b[1]).abs() <= 1e-12 * a[1].abs().max(1.0));
    }

    #[test]
    fn hausdorff_is_symmetric_and_bounded_by_offset(dx in -1.0f64..1.0, dy in -1.0f64..1.0, n in 2usize..30) {
        let a: Vec<[f64; 2]> = (0..n).map(|i| [i as f64, (i as f64).sqrt()]).collect();
        let b: Vec<[f64; 2]> = a.iter().map(|q| [q[0] + dx, q[1] + dy]).collect();
        let d = hausdorff_distance(&a, &b);
        prop_assert!((d - hausdorff_distance(&b, &a)).abs() <= 1e-14);
        prop_assert!(d <= dx.hypot(dy) + 1e-12);
    }

    #[test]
    fn two_segments_cross_at_most_once(
        ax in -1.0f64..1.0, ay in -1.0f64..1.0, bx in -1.0f64..1.0, by in -1.0f64..1.0,
        cx in -1.0f64..1.0, cy in -1.0f64..1.0, dx in -1.0f64..1.0, dy in -1.0f64..1.0,
    ) {
        let x = polyline_intersections(&[[ax, ay], [bx, by]], &[[cx, cy], [dx, dy]]);
        prop_assert!(x.crossings.len() <= 1);
        for c in &x.crossings {
            prop_assert!(c.angle > 0.0 && c.angle <= std::f64::consts::FRAC_PI_2 + 1e-15);
        }
    }
}
