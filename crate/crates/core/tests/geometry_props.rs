use nalgebra::DMatrix;
use proptest::prelude::*;
use reachkit::geometry::{contains, convex_hull};

fn cloud(d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, d), (d + 3)..60)
}

fn dim_and_cloud() -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
    (2usize..=4).prop_flat_map(|d| (Just(d), cloud(d)))
}

fn orthogonal(d: usize, seed: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| seed[(i * d + j) % seed.len()] + if i == j { 0.5 } else { 0.0 })
        .qr()
        .q()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scaling_law((d, pts) in dim_and_cloud(), alpha in 0.1f64..5.0) {
        let h = convex_hull(&pts, d).unwrap();
        prop_assume!(!h.degenerate && h.volume > 1e-6);
        let scaled: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|v| v * alpha).collect()).collect();
        let v = convex_hull(&scaled, d).unwrap().volume;
        let expect = alpha.powi(d as i32) * h.volume;
        prop_assert!((v - expect).abs() <= 1e-9 * expect);
    }

    #[test]
    fn rotation_invariance((d, pts) in dim_and_cloud(), seed in prop::collection::vec(-1.0f64..1.0, 16)) {
        let h = convex_hull(&pts, d).unwrap();
        prop_assume!(!h.degenerate && h.volume > 1e-6);
        let q = orthogonal(d, &seed);
        let rotated: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| (&q * nalgebra::DVector::from_column_slice(p)).iter().copied().collect())
            .collect();
        let v = convex_hull(&rotated, d).unwrap().volume;
        prop_assert!((v - h.volume).abs() <= 1e-9 * h.volume);
    }

    #[test]
    fn monotone_under_addition((d, pts) in dim_and_cloud(), extra in prop::collection::vec(-15.0f64..15.0, 4)) {
        let before = convex_hull(&pts, d).unwrap().volume;
        let mut more = pts.clone();
        more.push(extra[..d].to_vec());
        let after = convex_hull(&more, d).unwrap().volume;
        prop_assert!(after >= before - 1e-12);
    }

    #[test]
    fn idempotent_and_self_containing((d, pts) in dim_and_cloud()) {
        let h = convex_hull(&pts, d).unwrap();
        prop_assume!(!h.degenerate);
        let again = convex_hull(&h.vertices, d).unwrap();
        let mut a = h.vertices.clone();
        let mut b = again.vertices.clone();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        prop_assert_eq!(a, b);
        for p in &pts {
            prop_assert!(contains(&h, p, 1e-9).unwrap());
        }
        for f in &h.facets {
            let norm: f64 = f.normal.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-12);
        }
    }
}
