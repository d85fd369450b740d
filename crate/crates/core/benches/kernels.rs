//! Sequential vs rayon backends on the kernels that dominate a fit.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DMatrix;

use lol_core::embed::{fit, FitOptions};
use lol_core::linalg::SvdMode;
use lol_core::par::{matmul_with, tr_matmul_with, Exec};
use lol_core::sim::{sample_classification, Family, LabelScheme, SimSpec};
use lol_core::Method;

fn backends() -> Vec<Exec> {
    #[cfg(feature = "parallel")]
    return vec![Exec::Sequential, Exec::Rayon];
    #[cfg(not(feature = "parallel"))]
    return vec![Exec::Sequential];
}

fn filled(rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |i, j| ((i * 13 + j * 7) % 101) as f64 / 101.0 - 0.5)
}

fn products(c: &mut Criterion) {
    let (p, n, k) = (4000, 400, 20);
    let x = filled(p, n);
    let omega = filled(n, k);
    let q = filled(p, k);
    let mut group = c.benchmark_group("products");
    for exec in backends() {
        group.bench_function(BenchmarkId::new("matmul", format!("{exec:?}")), |b| b.iter(|| matmul_with(exec, &x, &omega)));
        group.bench_function(BenchmarkId::new("tr_matmul", format!("{exec:?}")), |b| b.iter(|| tr_matmul_with(exec, &q, &x)));
    }
    group.finish();
}

fn fits(c: &mut Criterion) {
    let mut spec = SimSpec::new(Family::Spherical, 5000, 500, 0u64);
    spec.labels = LabelScheme::Balanced;
    let ds = sample_classification(&spec).unwrap().dataset;
    let opts = FitOptions {
        svd_mode: SvdMode::randomized(),
        ..FitOptions::default()
    };
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    group.bench_function("lol_d10_default_backend", |b| b.iter(|| fit(Method::Lol, &ds, 10, &opts).unwrap()));
    group.finish();
}

criterion_group!(benches, products, fits);
criterion_main!(benches);
