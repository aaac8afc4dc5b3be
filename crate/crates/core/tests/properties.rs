use proptest::prelude::*;
use slod::boundary::{multi_center, robust_normalize};
use slod::frechet::{frechet_mean, frechet_objective, FrechetConfig, WeightVector};
use slod::geometry::{distance, exp_map, log_map, mobius_add, PoincarePoint};
use slod::graph::Partition;
use slod::metrics::{ari, jsd, kendall_tau, vi};

fn point(dim: usize, max_norm: f64) -> impl Strategy<Value = PoincarePoint<f64>> {
    (prop::collection::vec(-1.0f64..1.0, dim), 0.0..max_norm).prop_map(|(v, r)| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = if n > 0.0 { r / n } else { 0.0 };
        PoincarePoint::new(v.iter().map(|x| x * scale).collect()).unwrap()
    })
}

fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n).prop_filter_map("nonzero", |v| {
        let s: f64 = v.iter().sum();
        (s > 1e-6).then(|| v.iter().map(|x| x / s).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn distance_is_a_metric(x in point(3, 0.95), y in point(3, 0.95), z in point(3, 0.95)) {
        let dxy = distance(&x, &y).unwrap();
        prop_assert!(dxy >= 0.0);
        prop_assert!((dxy - distance(&y, &x).unwrap()).abs() <= 1e-9 * (1.0 + dxy));
        prop_assert!(distance(&x, &x).unwrap() < 1e-6);
        let via = distance(&x, &z).unwrap() + distance(&z, &y).unwrap();
        prop_assert!(dxy <= via + 1e-9 * (1.0 + via));
    }

    #[test]
    fn mobius_translation_is_an_isometry(a in point(2, 0.9), x in point(2, 0.9), y in point(2, 0.9)) {
        let d = distance(&x, &y).unwrap();
        let dt = distance(&mobius_add(&a, &x).unwrap(), &mobius_add(&a, &y).unwrap()).unwrap();
        prop_assert!((d - dt).abs() <= 1e-6 * (1.0 + d), "{} vs {}", d, dt);
    }

    #[test]
    fn exp_inverts_log(x in point(4, 0.9), y in point(4, 0.9)) {
        let v = log_map(&x, &y).unwrap();
        let back = exp_map(&v);
        for (a, b) in back.coords().iter().zip(y.coords()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn frechet_mean_never_beats_by_perturbation(
        pts in prop::collection::vec(point(2, 0.8), 2..8),
        raw in prop::collection::vec(0.1f64..1.0, 8),
        dir in prop::collection::vec(-1.0f64..1.0, 2),
    ) {
        let w = WeightVector::from_masses(raw[..pts.len()].to_vec()).unwrap();
        let out = frechet_mean(&pts, &w, &FrechetConfig::default(), &pts[0]).unwrap();
        let f = frechet_objective(&out.mean, &pts, &w).unwrap();
        prop_assert!(f <= frechet_objective(&pts[0], &pts, &w).unwrap() + 1e-12);
        let m = out.mean.coords();
        let probe = PoincarePoint::new(vec![m[0] + 1e-3 * dir[0], m[1] + 1e-3 * dir[1]]);
        if let Ok(p) = probe {
            prop_assert!(f <= frechet_objective(&p, &pts, &w).unwrap() + 1e-9);
        }
    }

    #[test]
    fn multi_center_cost_never_increases(pts in prop::collection::vec(point(2, 0.9), 6..20), seed in 0u64..1000) {
        let w = WeightVector::uniform(pts.len()).unwrap();
        if let Ok(mix) = multi_center(&pts, &w, 3, pts.len(), 20, seed) {
            for pair in mix.costs.windows(2) {
                prop_assert!(pair[1] <= pair[0] + 1e-9 * (1.0 + pair[0]));
            }
            let total: f64 = mix.weights.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn sqrt_jsd_is_a_bounded_metric(p in distribution(6), q in distribution(6), r in distribution(6)) {
        let d = |a: &[f64], b: &[f64]| jsd(a, b).unwrap().sqrt();
        prop_assert!(jsd(&p, &q).unwrap() <= std::f64::consts::LN_2 + 1e-12);
        prop_assert!((d(&p, &q) - d(&q, &p)).abs() < 1e-12);
        prop_assert!(d(&p, &q) <= d(&p, &r) + d(&r, &q) + 1e-9);
    }

    #[test]
    fn partition_scores_are_label_invariant(labels in prop::collection::vec(0usize..4, 2..30), shift in 1usize..5) {
        let a = Partition::from_raw(&labels);
        let relabeled: Vec<usize> = labels.iter().map(|l| (l + shift) * 7).collect();
        let b = Partition::from_raw(&relabeled);
        prop_assert!((ari(&a, &b).unwrap() - 1.0).abs() < 1e-12 || a.num_clusters() == 1);
        prop_assert!(vi(&a, &b).unwrap().abs() < 1e-12);
    }

    #[test]
    fn kendall_tau_is_antisymmetric(x in prop::collection::vec(-10.0f64..10.0, 3..20)) {
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let z: Vec<f64> = x.iter().map(|v| -v).collect();
        let t = kendall_tau(&x, &y);
        if let Ok(t) = t {
            prop_assert!((t - 1.0).abs() < 1e-12);
            prop_assert!((kendall_tau(&x, &z).unwrap() + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn robust_normalize_is_shift_and_scale_invariant(x in prop::collection::vec(-5.0f64..5.0, 3..30), a in 0.5f64..4.0, b in -3.0f64..3.0) {
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        for (u, v) in robust_normalize(&x).iter().zip(robust_normalize(&y)) {
            prop_assert!((u - v).abs() < 1e-6 * (1.0 + u.abs()));
        }
    }
}
