use nalgebra::DMatrix;
use proptest::prelude::*;

use lol_core::classify::misclassification_rate;
use lol_core::embed::{embed_matrix, fit, FitOptions};
use lol_core::extensions::quantile_partition;
use lol_core::harness::{make_fold_plan, select_rstar};
use lol_core::linalg::SvdMode;
use lol_core::sim::{sample_classification, Family, SimSpec};
use lol_core::{Method, RngSeed};

fn exact() -> FitOptions {
    FitOptions {
        svd_mode: SvdMode::Exact,
        ..FitOptions::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn embedding_is_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let ds = sample_classification(&SimSpec::new(Family::Trunk, 15, 40, seed)).unwrap().dataset;
        let proj = fit(Method::Lol, &ds, 4, &exact()).unwrap();
        let x = DMatrix::from_fn(15, 3, |i, j| ((i + 2 * j) as f64).cos());
        let y = DMatrix::from_fn(15, 3, |i, j| ((3 * i + j) as f64).sin());
        let lhs = embed_matrix(&proj, &(&x * a + &y * b)).unwrap();
        let rhs = embed_matrix(&proj, &x).unwrap() * a + embed_matrix(&proj, &y).unwrap() * b;
        prop_assert!((lhs - rhs).amax() < 1e-9);
    }

    #[test]
    fn lol_directions_nest(seed in 0u64..1000, d in 2usize..8) {
        let ds = sample_classification(&SimSpec::new(Family::Trunk3, 12, 45, seed)).unwrap().dataset;
        let small = fit(Method::Lol, &ds, d, &exact()).unwrap();
        let large = fit(Method::Lol, &ds, d + 3, &exact()).unwrap();
        prop_assert_eq!(small.directions.clone(), large.prefix(d).directions);
    }

    #[test]
    fn lol_leads_with_the_mean_difference(seed in 0u64..1000) {
        let ds = sample_classification(&SimSpec::new(Family::Trunk, 10, 50, seed)).unwrap().dataset;
        let proj = fit(Method::Lol, &ds, 3, &exact()).unwrap();
        let mean = |c: usize| {
            let idx = ds.class_indices(c);
            ds.data().values().select_columns(&idx).column_mean()
        };
        let delta = (mean(0) - mean(1)).normalize();
        let first = proj.directions.column(0).normalize();
        prop_assert!((delta.dot(&first).abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn error_rates_are_fractions(pred in prop::collection::vec(0usize..3, 1..50), shift in 0usize..3) {
        let truth: Vec<usize> = pred.iter().map(|&p| (p + shift) % 3).collect();
        let rate = misclassification_rate(&pred, &truth).unwrap();
        prop_assert!((0.0..=1.0).contains(&rate));
        prop_assert_eq!(rate == 0.0, shift == 0);
    }

    #[test]
    fn rstar_is_at_most_rhat(curve in prop::collection::vec(prop::option::weighted(0.9, 0.0f64..1.0), 1..40)) {
        prop_assume!(curve.iter().any(Option::is_some));
        let (r_hat, r_star) = select_rstar(&curve).unwrap();
        prop_assert!(1 <= r_star && r_star <= r_hat && r_hat <= curve.len());
        let best = curve.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(curve[r_hat - 1], Some(best));
    }

    #[test]
    fn folds_partition_the_samples(n in 20usize..120, k in 2usize..6, seed in 0u64..100) {
        let labels: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % 3).collect();
        let plan = make_fold_plan(n, 50, 3, k, &labels, RngSeed(seed)).unwrap();
        let mut seen: Vec<usize> = plan.folds.iter().flatten().cloned().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        for (fold, train) in plan.folds.iter().zip(&plan.train_subsamples) {
            prop_assert!(train.iter().all(|i| !fold.contains(i)));
        }
    }

    #[test]
    fn quantile_bins_are_balanced(y in prop::collection::vec(-1e3f64..1e3, 40..200), k in 2usize..6) {
        let part = quantile_partition(&y, k).unwrap();
        let mut counts = vec![0usize; part.num_classes()];
        for &l in &part.labels {
            counts[l] += 1;
        }
        prop_assert!(counts.iter().all(|&c| c > 0));
        if part.num_classes() == k {
            let target = y.len() as f64 / k as f64;
            prop_assert!(counts.iter().all(|&c| (c as f64 - target).abs() <= target * 0.5 + 1.0));
        }
    }
}
