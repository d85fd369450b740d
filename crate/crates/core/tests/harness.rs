use lol_core::embed::FitOptions;
use lol_core::harness::{make_fold_plan, select_rstar, sweep, SweepOptions};
use lol_core::linalg::SvdMode;
use lol_core::sim::{sample_classification, Family, SimSpec};
use lol_core::{Method, RngSeed};

fn best(curve: &[Option<f64>]) -> f64 {
    curve.iter().flatten().cloned().fold(f64::INFINITY, f64::min)
}

#[test]
fn lol_beats_pca_on_trunk_across_seeds() {
    let mut wins = 0;
    let mut ties = 0;
    for s in 0..20u64 {
        let spec = SimSpec::new(Family::Trunk, 100, 200, s);
        let ds = sample_classification(&spec).unwrap().dataset;
        let plan = make_fold_plan(ds.n(), ds.p(), 2, 5, ds.labels(), RngSeed(s)).unwrap();
        let curves = sweep(&ds, &[Method::Lol, Method::Pca], 20, &plan, &SweepOptions::default()).unwrap();
        let (lol, pca) = (best(&curves[0].mean), best(&curves[1].mean));
        if lol < pca {
            wins += 1;
        } else if lol == pca {
            ties += 1;
        }
    }
    // One-sided sign test over the non-tied seeds at the 5% level.
    let trials = 20 - ties;
    let tail: f64 = (wins..=trials).map(|k| binom(trials, k)).sum::<f64>() / 2f64.powi(trials as i32);
    assert!(tail < 0.05, "LOL won {wins}/{trials} seeds (tail {tail:.4})");
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[test]
fn prefix_reuse_matches_refitting() {
    let spec = SimSpec::new(Family::Trunk3, 40, 90, 8u64);
    let ds = sample_classification(&spec).unwrap().dataset;
    let plan = make_fold_plan(ds.n(), ds.p(), 3, 3, ds.labels(), RngSeed(1)).unwrap();
    let fit = FitOptions {
        svd_mode: SvdMode::Exact,
        ..FitOptions::default()
    };
    let methods = [Method::Lol, Method::Pca, Method::Lfl];
    let reuse = SweepOptions {
        fit,
        ..SweepOptions::default()
    };
    let refit = SweepOptions {
        refit_per_r: true,
        ..reuse
    };
    let a = sweep(&ds, &methods, 10, &plan, &reuse).unwrap();
    let b = sweep(&ds, &methods, 10, &plan, &refit).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.per_fold, y.per_fold, "{:?}", x.method);
    }
}

#[test]
fn rstar_never_exceeds_argmin() {
    let curve = [Some(0.4), Some(0.2), Some(0.1), Some(0.1), None, Some(0.3)];
    let (r_hat, r_star) = select_rstar(&curve).unwrap();
    assert_eq!(r_hat, 3);
    assert!(r_star <= r_hat);
}
