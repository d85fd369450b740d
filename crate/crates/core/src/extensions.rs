//! Projection followed by a two-sample Hotelling test, and regression through
//! quantile-partitioned LOL.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::embed::{embed_matrix, fit, fit_lol, FitOptions, PLS_TOL};
use crate::error::{Error, Result};
use crate::linalg::SvdMode;
use crate::model::{DataMatrix, LabeledDataset, Method, Projection};
use crate::par;
use crate::rng::{stream, RngSeed};
use crate::sim::{sample_classification, LabelScheme, SimSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HotellingResult {
    pub t2: f64,
    pub f: f64,
    pub df1: f64,
    pub df2: f64,
    pub p_value: f64,
}

/// Column mean and scatter matrix `Σ (x − x̄)(x − x̄)ᵀ`.
fn mean_and_scatter(x: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let mean = x.column_mean();
    let mut c = x.clone();
    for mut col in c.column_iter_mut() {
        col -= &mean;
    }
    let s = &c * c.transpose();
    (mean, s)
}

/// Solves `S z = b` by Cholesky, falling back to a truncated pseudo-inverse.
fn spd_solve(s: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if let Some(ch) = s.clone().cholesky() {
        return ch.solve(b);
    }
    let svd = s.clone().svd(true, true);
    let tol = svd.singular_values.max() * 1e-12 * s.nrows() as f64;
    svd.solve(b, tol).unwrap_or_else(|_| DVector::zeros(b.len()))
}

/// Two-sample Hotelling T² on `d x n₀` and `d x n₁` samples with the pooled
/// covariance, referred to `F(d, n₀ + n₁ − d − 1)`.
pub fn hotelling_two_sample(e0: &DMatrix<f64>, e1: &DMatrix<f64>) -> Result<HotellingResult> {
    let d = e0.nrows();
    if e1.nrows() != d {
        return Err(Error::shape(format!("{d} rows"), format!("{} rows", e1.nrows())));
    }
    let (n0, n1) = (e0.ncols(), e1.ncols());
    let n = n0 + n1;
    if d == 0 || n0 == 0 || n1 == 0 || n < d + 2 {
        return Err(Error::TestUnderdetermined { d, n });
    }
    if e0.iter().chain(e1.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let (m0, s0) = mean_and_scatter(e0);
    let (m1, s1) = mean_and_scatter(e1);
    let pooled = (s0 + s1) / (n - 2) as f64;
    let diff = m0 - m1;
    let quad = if diff.iter().all(|v| *v == 0.0) {
        0.0
    } else {
        diff.dot(&spd_solve(&pooled, &diff)).max(0.0)
    };
    let t2 = (n0 * n1) as f64 / n as f64 * quad;
    let (df1, df2) = (d as f64, (n - d - 1) as f64);
    let f = t2 * df2 / (df1 * (n - 2) as f64);
    let p_value = if t2 == 0.0 {
        1.0
    } else {
        FisherSnedecor::new(df1, df2)
            .map_err(|e| Error::InvalidInput(e.to_string()))?
            .sf(f)
            .clamp(0.0, 1.0)
    };
    Ok(HotellingResult { t2, f, df1, df2, p_value })
}

/// Splits the columns of `x` by a 0/1 label.
fn split_groups(x: &DMatrix<f64>, labels: &[usize]) -> (DMatrix<f64>, DMatrix<f64>) {
    let g0: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    let g1: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    (x.select_columns(&g0), x.select_columns(&g1))
}

/// How the projected test is turned into a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Calibration {
    /// Fit and test on the same sample and use the F reference. For a
    /// supervised projection this is anticonservative.
    Parametric,
    /// Fit on a random half, test on the other half with the F reference.
    SplitSample,
    /// Refit the projection for each of `permutations` label shuffles and
    /// use the permutation distribution of T².
    Permutation { permutations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOptions {
    pub calibration: Calibration,
    pub svd_mode: SvdMode,
}

impl Default for TestOptions {
    fn default() -> Self {
        TestOptions {
            calibration: Calibration::Permutation { permutations: 39 },
            svd_mode: SvdMode::Auto,
        }
    }
}

fn projected_t2(ds: &LabeledDataset, method: Method, d: usize, fit_opts: &FitOptions, test_x: &DMatrix<f64>, test_y: &[usize]) -> Result<HotellingResult> {
    let proj = fit(method, ds, d, fit_opts)?;
    let z = embed_matrix(&proj, test_x)?;
    let (a, b) = split_groups(&z, test_y);
    hotelling_two_sample(&a, &b)
}

/// p-value of the projected Hotelling test on one labelled two-class sample.
pub fn projected_test_pvalue(ds: &LabeledDataset, method: Method, d: usize, seed: RngSeed, opts: &TestOptions) -> Result<f64> {
    if ds.num_classes() != 2 {
        return Err(Error::InvalidInput("the two-sample test needs exactly two classes".into()));
    }
    let fit_opts = FitOptions {
        svd_mode: opts.svd_mode,
        seed,
        orthonormalize: false,
    };
    let x = ds.data().values();
    match opts.calibration {
        Calibration::Parametric => Ok(projected_t2(ds, method, d, &fit_opts, x, ds.labels())?.p_value),
        Calibration::SplitSample => {
            let mut rng = seed.derive_rng(stream::SUBSAMPLE, 0);
            let mut half = vec![Vec::new(), Vec::new()];
            // stratified halves so both keep both classes
            for c in 0..2 {
                let mut idx = ds.class_indices(c);
                idx.shuffle(&mut rng);
                let cut = idx.len() / 2;
                half[0].extend_from_slice(&idx[..cut]);
                half[1].extend_from_slice(&idx[cut..]);
            }
            half.iter_mut().for_each(|h| h.sort_unstable());
            let train = ds.subset(&half[0])?;
            let test_y: Vec<usize> = half[1].iter().map(|&i| ds.labels()[i]).collect();
            Ok(projected_t2(&train, method, d, &fit_opts, &x.select_columns(&half[1]), &test_y)?.p_value)
        }
        Calibration::Permutation { permutations } => {
            if permutations == 0 {
                return Err(Error::InvalidInput("need at least one permutation".into()));
            }
            let observed = projected_t2(ds, method, d, &fit_opts, x, ds.labels())?.t2;
            let mut rng = seed.derive_rng(stream::PERMUTATION, 0);
            let mut labels = ds.labels().to_vec();
            let mut exceed = 0usize;
            for _ in 0..permutations {
                labels.shuffle(&mut rng);
                let perm = LabeledDataset::new(ds.data().clone(), labels.clone(), 2)?;
                if projected_t2(&perm, method, d, &fit_opts, x, &labels)?.t2 >= observed {
                    exceed += 1;
                }
            }
            Ok((1 + exceed) as f64 / (1 + permutations) as f64)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerEstimate {
    pub power: f64,
    pub rejections: usize,
    pub reps: usize,
    pub std_error: f64,
}

/// Rejection rate at level `alpha` of projection + Hotelling over `reps`
/// simulated two-class samples. Each replicate reseeds `spec` and uses
/// balanced labels, so `spec.n / 2` samples per group.
pub fn projected_test_power(spec: &SimSpec, method: Method, d: usize, alpha: f64, reps: usize, seed: RngSeed, opts: &TestOptions) -> Result<PowerEstimate> {
    if spec.family.num_classes() != 2 {
        return Err(Error::InvalidInput(format!("{} is not a two-class family", spec.family.name())));
    }
    if reps == 0 || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput("need reps > 0 and alpha in (0, 1)".into()));
    }
    let outcomes = par::map_range(reps, |r| -> Result<bool> {
        let rep_seed = seed.derive(stream::REPLICATE, r as u64);
        let mut s = spec.pinned().with_seed(rep_seed);
        s.labels = LabelScheme::Balanced;
        let sample = sample_classification(&s)?;
        Ok(projected_test_pvalue(&sample.dataset, method, d, rep_seed, opts)? <= alpha)
    });
    let rejections = outcomes.into_iter().collect::<Result<Vec<bool>>>()?.into_iter().filter(|r| *r).count();
    let power = rejections as f64 / reps as f64;
    Ok(PowerEstimate {
        power,
        rejections,
        reps,
        std_error: (power * (1.0 - power) / reps as f64).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantilePartition {
    /// Increasing cut points; sample `i` belongs to the number of cut points
    /// strictly below `y[i]`.
    pub boundaries: Vec<f64>,
    pub labels: Vec<usize>,
}

impl QuantilePartition {
    pub fn num_classes(&self) -> usize {
        self.boundaries.len() + 1
    }

    pub fn assign(&self, y: f64) -> usize {
        self.boundaries.iter().filter(|&&b| y > b).count()
    }
}

/// Cuts `y` at its empirical `j/K` quantiles. Values equal to a cut point go
/// to the lower class. Cuts that would leave a class empty (ties) are
/// dropped, so fewer than `K` classes can result.
pub fn quantile_partition(y: &[f64], k: usize) -> Result<QuantilePartition> {
    let n = y.len();
    if k > n {
        return Err(Error::TooManyBins { k, n });
    }
    if k < 2 {
        return Err(Error::InvalidInput("need at least two bins".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let max = sorted[n - 1];
    let mut boundaries: Vec<f64> = Vec::with_capacity(k - 1);
    for j in 1..k {
        let b = sorted[(j * n).div_ceil(k) - 1];
        if b < max && boundaries.last().is_none_or(|&last| b > last) {
            boundaries.push(b);
        }
    }
    if boundaries.is_empty() {
        return Err(Error::DegenerateTarget);
    }
    let mut part = QuantilePartition { boundaries, labels: Vec::new() };
    part.labels = y.iter().map(|&v| part.assign(v)).collect();
    Ok(part)
}

/// Projection followed by least squares with an intercept on the embedded
/// features.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedRegression {
    pub projection: Projection,
    pub intercept: f64,
    pub coefficients: DVector<f64>,
    pub partition: Option<QuantilePartition>,
}

impl ProjectedRegression {
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        let z = embed_matrix(&self.projection, x)?;
        Ok(z.column_iter().map(|c| self.intercept + self.coefficients.dot(&c)).collect())
    }

    pub fn mse(&self, x: &DMatrix<f64>, y: &[f64]) -> Result<f64> {
        mean_squared_error(&self.predict(x)?, y)
    }
}

pub fn mean_squared_error(pred: &[f64], y: &[f64]) -> Result<f64> {
    if pred.len() != y.len() || y.is_empty() {
        return Err(Error::shape(format!("{} values", y.len()), format!("{}", pred.len())));
    }
    Ok(pred.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
}

/// Least squares of `y` on `[1, zᵀ]`, minimum-norm when rank deficient.
fn ols_with_intercept(z: &DMatrix<f64>, y: &[f64]) -> Result<(f64, DVector<f64>)> {
    let (d, n) = z.shape();
    let design = DMatrix::from_fn(n, d + 1, |i, j| if j == 0 { 1.0 } else { z[(j - 1, i)] });
    let svd = design.svd(true, true);
    let tol = svd.singular_values.max() * 1e-12 * n.max(d + 1) as f64;
    let beta = svd
        .solve(&DVector::from_column_slice(y), tol)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok((beta[0], beta.rows(1, d).into_owned()))
}

fn check_regression_input(x: &DataMatrix, y: &[f64]) -> Result<()> {
    if y.len() != x.n() {
        return Err(Error::shape(format!("{} targets", x.n()), format!("{}", y.len())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Default number of quantile classes for regression.
pub const DEFAULT_REGRESSION_BINS: usize = 4;

/// Partitions `y` into `k` quantile classes, fits LOL with `d` directions on
/// them and regresses `y` on the embedding.
pub fn lol_regression(x: &DataMatrix, y: &[f64], k: usize, d: usize, opts: &FitOptions) -> Result<ProjectedRegression> {
    check_regression_input(x, y)?;
    let part = quantile_partition(y, k)?;
    let ds = LabeledDataset::new(x.clone(), part.labels.clone(), part.num_classes())?;
    let projection = fit_lol(&ds, d, opts)?;
    let z = embed_matrix(&projection, x.values())?;
    let (intercept, coefficients) = ols_with_intercept(&z, y)?;
    Ok(ProjectedRegression {
        projection,
        intercept,
        coefficients,
        partition: Some(part),
    })
}

/// PLS1 regression with `d` components (NIPALS with deflation). The returned
/// projection maps raw features to the component scores up to a constant.
pub fn pls_regression(x: &DataMatrix, y: &[f64], d: usize) -> Result<ProjectedRegression> {
    check_regression_input(x, y)?;
    let (p, n) = (x.p(), x.n());
    let max = p.min(n.saturating_sub(1));
    if d == 0 || d > max {
        return Err(Error::RankRequestTooLarge { requested: d, max });
    }
    let mean = x.values().column_mean();
    let mut xc = x.values().clone();
    for mut col in xc.column_iter_mut() {
        col -= &mean;
    }
    let ybar = y.iter().sum::<f64>() / n as f64;
    let mut yc = DVector::from_iterator(n, y.iter().map(|v| v - ybar));
    let mut w_all = DMatrix::<f64>::zeros(p, d);
    let mut p_all = DMatrix::<f64>::zeros(p, d);
    let mut kept = 0;
    for a in 0..d {
        let w = &xc * &yc;
        let norm = w.norm();
        if norm < PLS_TOL {
            break;
        }
        let w = w / norm;
        let t = xc.tr_mul(&w);
        let tt = t.dot(&t);
        if tt < PLS_TOL * PLS_TOL {
            break;
        }
        let load = &xc * &t / tt;
        xc -= &load * t.transpose();
        yc -= &t * (t.dot(&yc) / tt);
        w_all.set_column(a, &w);
        p_all.set_column(a, &load);
        kept = a + 1;
    }
    if kept == 0 {
        return Err(Error::PlsNoConvergence { component: 0 });
    }
    let w = w_all.columns(0, kept).into_owned();
    let pw = p_all.columns(0, kept).tr_mul(&w);
    let pw_inv = pw.try_inverse().ok_or(Error::PlsNoConvergence { component: kept })?;
    let directions = w * pw_inv;
    let projection = Projection {
        directions,
        method: Method::Pls,
        seed: None,
    };
    let z = embed_matrix(&projection, x.values())?;
    let (intercept, coefficients) = ols_with_intercept(&z, y)?;
    Ok(ProjectedRegression {
        projection,
        intercept,
        coefficients,
        partition: None,
    })
}
