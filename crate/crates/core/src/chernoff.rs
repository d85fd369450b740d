//! Chernoff information between Gaussians and the closed-form comparisons of
//! LOL against eigenvector projections.
//!
//! Two conventions appear. The *raw* one is the quadratic form
//! `δᵀA(AᵀΣA)⁻¹Aᵀδ`; the *scaled* one is the actual Chernoff information,
//! which for equal covariances is the raw value divided by 8.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::descending_order;
use crate::model::GaussianModel;
use crate::par;
use crate::rng::{stream, RngSeed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    Raw,
    Scaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernoffReport {
    pub value: f64,
    pub t_star: f64,
    pub convention: Convention,
}

impl ChernoffReport {
    /// Same report in the raw convention (`8 x` scaled).
    pub fn to_raw(self) -> ChernoffReport {
        match self.convention {
            Convention::Raw => self,
            Convention::Scaled => ChernoffReport {
                value: 8.0 * self.value,
                convention: Convention::Raw,
                ..self
            },
        }
    }
}

/// A Gaussian `(μ, Σ)` with a dense covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl Gaussian {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        Gaussian { mean, cov }
    }
}

fn chol(m: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    m.cholesky().ok_or(Error::NotPositiveDefinite)
}

fn log_det(ch: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * ch.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

struct Pair {
    delta: DVector<f64>,
    s0: DMatrix<f64>,
    s1: DMatrix<f64>,
    logdet0: f64,
    logdet1: f64,
}

impl Pair {
    fn new(f0: &Gaussian, f1: &Gaussian) -> Result<Pair> {
        let p = f0.mean.len();
        if f1.mean.len() != p || f0.cov.shape() != (p, p) || f1.cov.shape() != (p, p) {
            return Err(Error::shape(format!("dimension {p}"), "mismatched Gaussian parameters"));
        }
        Ok(Pair {
            delta: &f1.mean - &f0.mean,
            logdet0: log_det(&chol(f0.cov.clone())?),
            logdet1: log_det(&chol(f1.cov.clone())?),
            s0: f0.cov.clone(),
            s1: f1.cov.clone(),
        })
    }

    /// `−log ∫ f0^t f1^(1−t)`.
    fn c_t(&self, t: f64) -> Result<f64> {
        let mix = &self.s0 * (1.0 - t) + &self.s1 * t;
        let ch = chol(mix)?;
        let quad = ch.solve(&self.delta).dot(&self.delta);
        let logs = log_det(&ch) - (1.0 - t) * self.logdet0 - t * self.logdet1;
        Ok(0.5 * t * (1.0 - t) * quad + 0.5 * logs)
    }
}

/// Chernoff divergence `C_t = −log ∫ f0(x)^t f1(x)^(1−t) dx`.
///
/// With `Σ_t = (1−t)Σ0 + tΣ1` this is
/// `t(1−t)/2 · δᵀΣ_t⁻¹δ + ½ log(|Σ_t| / (|Σ0|^(1−t) |Σ1|^t))`.
pub fn chernoff_divergence_t(f0: &Gaussian, f1: &Gaussian, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("t = {t} outside [0, 1]")));
    }
    Pair::new(f0, f1)?.c_t(t)
}

const GOLDEN_TOL: f64 = 1e-10;
const COARSE_GRID: usize = 100;
const FINE_STEP: f64 = 1e-4;

/// Chernoff information `sup_t C_t`, by golden-section search on `(0, 1)`.
///
/// A coarse scan first checks for a single interior peak; if the sampled
/// curve has more than one local maximum, a `1e-4` grid scan is used instead.
pub fn chernoff_gaussian(f0: &Gaussian, f1: &Gaussian) -> Result<ChernoffReport> {
    let pair = Pair::new(f0, f1)?;
    let f = |t: f64| pair.c_t(t);
    let coarse: Vec<f64> = (0..=COARSE_GRID)
        .map(|i| f(i as f64 / COARSE_GRID as f64))
        .collect::<Result<_>>()?;
    let peaks = (1..COARSE_GRID)
        .filter(|&i| coarse[i] > coarse[i - 1] && coarse[i] >= coarse[i + 1])
        .count();
    let (t_star, value) = if peaks > 1 {
        let steps = (1.0 / FINE_STEP) as usize;
        let mut best = (0.5, f(0.5)?);
        for i in 1..steps {
            let t = i as f64 * FINE_STEP;
            let v = f(t)?;
            if v > best.1 {
                best = (t, v);
            }
        }
        best
    } else {
        golden_max(&f, 0.0, 1.0)?
    };
    Ok(ChernoffReport {
        value: value.max(0.0),
        t_star,
        convention: Convention::Scaled,
    })
}

fn golden_max(f: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > GOLDEN_TOL {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        }
    }
    let t = 0.5 * (a + b);
    Ok((t, f(t)?))
}

/// Smallest pairwise Chernoff information over all class pairs of `model`,
/// optionally after projecting onto the columns of `proj`.
pub fn chernoff_pairwise_min(model: &GaussianModel, proj: Option<&DMatrix<f64>>) -> Result<ChernoffReport> {
    let c = model.num_classes();
    let gaussians: Vec<Gaussian> = (0..c)
        .map(|k| match proj {
            None => Gaussian::new(model.mean(k), model.cov(k).to_dense()),
            Some(a) => Gaussian::new(a.tr_mul(&model.mean(k)), model.cov(k).project(a)),
        })
        .collect();
    let mut best: Option<ChernoffReport> = None;
    for i in 0..c {
        for j in (i + 1)..c {
            let r = chernoff_gaussian(&gaussians[i], &gaussians[j])?;
            if best.is_none_or(|b| r.value < b.value) {
                best = Some(r);
            }
        }
    }
    best.ok_or(Error::DegenerateLabels)
}

/// `δᵀA(AᵀΣA)⁻¹Aᵀδ`. A ridge of `1e-8 · trace / d` is tried if the projected
/// covariance is not positive definite.
pub fn projected_chernoff_quadform(a: &DMatrix<f64>, delta: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<f64> {
    let p = delta.len();
    if a.nrows() != p || sigma.shape() != (p, p) {
        return Err(Error::shape(format!("dimension {p}"), format!("A {}x{}, Σ {:?}", a.nrows(), a.ncols(), sigma.shape())));
    }
    let d = a.ncols();
    if d == 0 {
        return Ok(0.0);
    }
    let m = a.transpose() * (sigma * a);
    let v = a.tr_mul(delta);
    let ch = match m.clone().cholesky() {
        Some(ch) => ch,
        None => {
            let ridge = crate::classify::RIDGE * m.trace().max(0.0) / d as f64;
            (m + DMatrix::identity(d, d) * ridge)
                .cholesky()
                .ok_or(Error::SingularProjectedCov)?
        }
    };
    Ok(ch.solve(&v).dot(&v))
}

/// Eigenpairs of a symmetric matrix, by decreasing eigenvalue.
pub fn sorted_eigen(sigma: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(sigma.clone());
    let order = descending_order(eig.eigenvalues.as_slice());
    let vals = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    (vals, eig.eigenvectors.select_columns(&order))
}

/// Pieces of the closed-form LOL quadratic form for `A = [δ | U_{d−1}]`.
struct LolForm {
    /// `(δᵀ(I − U_{d−1}U_{d−1}ᵀ)δ)² / γ`
    residual_term: f64,
    /// `δᵀ Σ_{d−1}† δ`
    head_term: f64,
}

fn lol_form(delta: &DVector<f64>, vals: &DVector<f64>, vecs: &DMatrix<f64>, d: usize) -> Result<LolForm> {
    let k = d - 1;
    let coef = vecs.columns(0, k).tr_mul(delta);
    let head_term: f64 = (0..k).map(|i| coef[i] * coef[i] / vals[i]).sum();
    let resid = delta.norm_squared() - coef.norm_squared();
    // γ = δᵀ(Σ − Σ_{d−1})δ = Σ_{i ≥ d} λ_i (u_iᵀδ)²
    let full = vecs.tr_mul(delta);
    let gamma: f64 = (k..vals.len()).map(|i| vals[i] * full[i] * full[i]).sum();
    let scale = delta.norm_squared() * vals[0].abs();
    if !(gamma > 1e-14 * scale) {
        return Err(Error::DegenerateGamma);
    }
    Ok(LolForm {
        residual_term: resid * resid / gamma,
        head_term,
    })
}

fn check_gap_inputs(delta: &DVector<f64>, sigma: &DMatrix<f64>, d: usize) -> Result<()> {
    let p = delta.len();
    if sigma.shape() != (p, p) {
        return Err(Error::shape(format!("{p}x{p} covariance"), format!("{:?}", sigma.shape())));
    }
    if d == 0 || d > p {
        return Err(Error::InvalidInput(format!("d = {d} must lie in 1..={p}")));
    }
    if sigma.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(())
}

/// Closed-form raw quadratic form of `A = [δ | U_{d−1}]` with `U` the
/// eigenvectors of `Σ`.
pub fn lol_quadform_closed(delta: &DVector<f64>, sigma: &DMatrix<f64>, d: usize) -> Result<f64> {
    check_gap_inputs(delta, sigma, d)?;
    if delta.norm_squared() == 0.0 {
        return Ok(0.0);
    }
    let (vals, vecs) = sorted_eigen(sigma);
    let form = lol_form(delta, &vals, &vecs, d)?;
    Ok(form.residual_term + form.head_term)
}

/// LOL minus top-`d` eigenvector projection, in the raw convention:
/// `(δᵀ(I − U_{d−1}U_{d−1}ᵀ)δ)²/γ − (u_dᵀδ)²/λ_d`.
pub fn lol_vs_lda_gap(delta: &DVector<f64>, sigma: &DMatrix<f64>, d: usize) -> Result<f64> {
    check_gap_inputs(delta, sigma, d)?;
    if delta.norm_squared() == 0.0 {
        return Ok(0.0);
    }
    let (vals, vecs) = sorted_eigen(sigma);
    let form = lol_form(delta, &vals, &vecs, d)?;
    let ud = vecs.column(d - 1).dot(delta);
    Ok(form.residual_term - ud * ud / vals[d - 1])
}

/// LOL minus the projection onto the top-`d` eigenvectors of the pooled
/// covariance `Σ̃ = Σ + δδᵀ/4`, in the raw convention. The pooled term is
/// `4q / (4 − q)` with `q = δᵀ Σ̃_d† δ`.
pub fn lol_vs_pca_gap(delta: &DVector<f64>, sigma: &DMatrix<f64>, d: usize) -> Result<f64> {
    check_gap_inputs(delta, sigma, d)?;
    if delta.norm_squared() == 0.0 {
        return Ok(0.0);
    }
    let pca = pca_quadform_closed(delta, sigma, d)?;
    let (vals, vecs) = sorted_eigen(sigma);
    let form = lol_form(delta, &vals, &vecs, d)?;
    Ok(form.residual_term + form.head_term - pca)
}

/// `4q / (4 − q)`, the raw quadratic form of the top-`d` pooled eigenvectors.
pub fn pca_quadform_closed(delta: &DVector<f64>, sigma: &DMatrix<f64>, d: usize) -> Result<f64> {
    let pooled = sigma + delta * delta.transpose() / 4.0;
    let (vals, vecs) = sorted_eigen(&pooled);
    let coef = vecs.columns(0, d).tr_mul(delta);
    let q: f64 = (0..d).map(|i| coef[i] * coef[i] / vals[i]).sum();
    let denom = 4.0 - q;
    if denom.abs() < 1e-12 {
        return Err(Error::PooledDenominatorDegenerate(denom));
    }
    Ok(4.0 * q / denom)
}

/// The `[δ | U_{d−1}]` matrix for `Σ`.
pub fn lol_population_projection(delta: &DVector<f64>, sigma: &DMatrix<f64>, d: usize) -> DMatrix<f64> {
    let (_, vecs) = sorted_eigen(sigma);
    let mut a = DMatrix::zeros(delta.len(), d);
    a.set_column(0, delta);
    a.columns_mut(1, d - 1).copy_from(&vecs.columns(0, d - 1));
    a
}

/// Outcome of a randomized sweep over both gap identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSweep {
    pub instances: usize,
    pub checks: usize,
    /// Smallest LOL-vs-eigenvector gap seen.
    pub min_lda_gap: f64,
    /// Largest relative disagreement between closed forms and direct quadforms.
    pub max_lda_rel_err: f64,
    pub max_pca_rel_err: f64,
    /// Cases where `δ` has a component outside `span(U_d)` but the gap was not positive.
    pub strictness_violations: usize,
    /// Cases skipped because `γ` or the pooled denominator degenerated.
    pub skipped: usize,
}

/// Random positive definite `Σ` (`p x p`) with a spread-out spectrum.
pub fn random_pd(p: usize, rng: &mut crate::rng::Rng) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(p, p, |_, _| rng.sample(StandardNormal));
    &g * g.transpose() / p as f64 + DMatrix::identity(p, p) * 0.05
}

/// Checks both gap closed forms against direct quadforms on `instances` random
/// problems with `p ≤ max_p`, for every `d ∈ 1..=p`.
pub fn gap_sweep(instances: usize, max_p: usize, seed: RngSeed) -> GapSweep {
    struct One {
        checks: usize,
        min_gap: f64,
        lda_err: f64,
        pca_err: f64,
        strict_bad: usize,
        skipped: usize,
    }
    let results = par::map_range(instances, |i| {
        let mut rng = seed.derive_rng(stream::REPLICATE, i as u64);
        let p = rng.random_range(1..=max_p.max(1));
        let sigma = random_pd(p, &mut rng);
        let delta = DVector::<f64>::from_fn(p, |_, _| rng.sample(StandardNormal));
        let (_, vecs) = sorted_eigen(&sigma);
        let mut out = One {
            checks: 0,
            min_gap: f64::INFINITY,
            lda_err: 0.0,
            pca_err: 0.0,
            strict_bad: 0,
            skipped: 0,
        };
        for d in 1..=p {
            let gap = match lol_vs_lda_gap(&delta, &sigma, d) {
                Ok(g) => g,
                Err(_) => {
                    out.skipped += 1;
                    continue;
                }
            };
            let a = lol_population_projection(&delta, &sigma, d);
            let lol_q = projected_chernoff_quadform(&a, &delta, &sigma).unwrap_or(f64::NAN);
            let lda_q = projected_chernoff_quadform(&vecs.columns(0, d).into_owned(), &delta, &sigma).unwrap_or(f64::NAN);
            let scale = 1f64.max(lol_q.abs()).max(lda_q.abs());
            let err = ((lol_q - lda_q) - gap).abs() / scale;
            out.lda_err = out.lda_err.max(if err.is_nan() { f64::INFINITY } else { err });
            out.min_gap = out.min_gap.min(gap);
            let outside = delta.norm_squared() - vecs.columns(0, d).tr_mul(&delta).norm_squared();
            if outside > 1e-6 * delta.norm_squared() && !(gap > 0.0) {
                out.strict_bad += 1;
            }
            out.checks += 1;

            if let Ok(pg) = lol_vs_pca_gap(&delta, &sigma, d) {
                let pooled = &sigma + &delta * delta.transpose() / 4.0;
                let (_, pvecs) = sorted_eigen(&pooled);
                let pca_q = projected_chernoff_quadform(&pvecs.columns(0, d).into_owned(), &delta, &sigma).unwrap_or(f64::NAN);
                let scale = 1f64.max(lol_q.abs()).max(pca_q.abs());
                let err = ((lol_q - pca_q) - pg).abs() / scale;
                out.pca_err = out.pca_err.max(if err.is_nan() { f64::INFINITY } else { err });
            }
        }
        out
    });
    let mut sweep = GapSweep {
        instances,
        checks: 0,
        min_lda_gap: f64::INFINITY,
        max_lda_rel_err: 0.0,
        max_pca_rel_err: 0.0,
        strictness_violations: 0,
        skipped: 0,
    };
    for r in results {
        sweep.checks += r.checks;
        sweep.min_lda_gap = sweep.min_lda_gap.min(r.min_gap);
        sweep.max_lda_rel_err = sweep.max_lda_rel_err.max(r.lda_err);
        sweep.max_pca_rel_err = sweep.max_pca_rel_err.max(r.pca_err);
        sweep.strictness_violations += r.strict_bad;
        sweep.skipped += r.skipped;
    }
    sweep
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    fn vec(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn equal_covariance_closed_form() {
        let f0 = Gaussian::new(vec(&[0.0, 0.0]), diag(&[1.0, 1.0]));
        let f1 = Gaussian::new(vec(&[2.0, 0.0]), diag(&[1.0, 1.0]));
        let r = chernoff_gaussian(&f0, &f1).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12);
        assert!((r.t_star - 0.5).abs() < 1e-6);
        assert!((r.to_raw().value - 4.0).abs() < 1e-11);
        assert_eq!(chernoff_gaussian(&f0, &f0).unwrap().value, 0.0);
    }

    /// Trapezoid integral of f0^t f1^(1−t) on a wide 1-D grid.
    fn integrate_1d(m0: f64, v0: f64, m1: f64, v1: f64, t: f64) -> f64 {
        let dens = |x: f64, m: f64, v: f64| (-(x - m).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
        let (lo, hi, n) = (-40.0, 40.0, 400_000);
        let h = (hi - lo) / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let x = lo + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            s += w * dens(x, m0, v0).powf(t) * dens(x, m1, v1).powf(1.0 - t);
        }
        -(s * h).ln()
    }

    #[test]
    fn divergence_matches_numerical_integral() {
        let f0 = Gaussian::new(vec(&[0.3]), diag(&[1.0]));
        let f1 = Gaussian::new(vec(&[1.7]), diag(&[3.0]));
        for &t in &[0.1, 0.35, 0.5, 0.8] {
            let got = chernoff_divergence_t(&f0, &f1, t).unwrap();
            let want = integrate_1d(0.3, 1.0, 1.7, 3.0, t);
            assert!((got - want).abs() < 1e-8, "t={t}: {got} vs {want}");
        }
    }

    #[test]
    fn divergence_limits_and_symmetry() {
        let f0 = Gaussian::new(vec(&[0.0, 1.0]), diag(&[1.0, 2.0]));
        let f1 = Gaussian::new(vec(&[1.0, 0.0]), diag(&[3.0, 0.5]));
        let half01 = chernoff_divergence_t(&f0, &f1, 0.5).unwrap();
        let half10 = chernoff_divergence_t(&f1, &f0, 0.5).unwrap();
        assert!((half01 - half10).abs() < 1e-12);
        assert!(chernoff_divergence_t(&f0, &f1, 1e-6).unwrap().abs() < 1e-5);
        assert!(chernoff_divergence_t(&f0, &f1, 1.0 - 1e-6).unwrap().abs() < 1e-5);
        let a = chernoff_gaussian(&f0, &f1).unwrap();
        let b = chernoff_gaussian(&f1, &f0).unwrap();
        assert!((a.value - b.value).abs() < 1e-10);
        assert!((a.t_star - (1.0 - b.t_star)).abs() < 1e-6);
    }

    #[test]
    fn optimizer_matches_fine_grid() {
        let f0 = Gaussian::new(vec(&[0.0, 0.0]), diag(&[1.0, 2.0]));
        let f1 = Gaussian::new(vec(&[0.0, 0.0]), diag(&[2.0, 1.0]));
        let r = chernoff_gaussian(&f0, &f1).unwrap();
        let pair = Pair::new(&f0, &f1).unwrap();
        let mut best = 0.0f64;
        for i in 1..1_000_000 {
            best = best.max(pair.c_t(i as f64 * 1e-6).unwrap());
        }
        assert!(r.value >= best - 1e-12 && r.value - best < 1e-10);
        assert!((r.t_star - 0.5).abs() < 1e-6);
        let skew = Gaussian::new(vec(&[1.0, 0.0]), diag(&[5.0, 0.2]));
        let r = chernoff_gaussian(&f0, &skew).unwrap();
        let pair = Pair::new(&f0, &skew).unwrap();
        let mut best = 0.0f64;
        for i in 1..1_000_000 {
            best = best.max(pair.c_t(i as f64 * 1e-6).unwrap());
        }
        assert!((r.value - best).abs() < 1e-10);
    }

    #[test]
    fn non_pd_rejected() {
        let f0 = Gaussian::new(vec(&[0.0]), diag(&[0.0]));
        let f1 = Gaussian::new(vec(&[1.0]), diag(&[1.0]));
        assert!(matches!(chernoff_gaussian(&f0, &f1), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn quadform_cases() {
        let sigma = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.1, 0.0, 0.1, 0.7]);
        let delta = vec(&[1.0, -2.0, 0.5]);
        let full = crate::linalg::random_rotation(3, RngSeed(4)) * 2.0;
        let q = projected_chernoff_quadform(&full, &delta, &sigma).unwrap();
        let direct = sigma.clone().try_inverse().unwrap();
        assert!((q - delta.dot(&(direct * &delta))).abs() < 1e-10);
        let perp = DMatrix::from_column_slice(3, 1, &[2.0, 1.0, 0.0]);
        assert!(projected_chernoff_quadform(&perp, &vec(&[1.0, -2.0, 0.0]), &DMatrix::identity(3, 3)).unwrap().abs() < 1e-15);
    }

    #[test]
    fn quadform_matches_explicit_projector() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let sigma = random_pd(8, &mut rng);
        let a = DMatrix::<f64>::from_fn(8, 3, |_, _| rng.sample(StandardNormal));
        let delta = DVector::<f64>::from_fn(8, |_, _| rng.sample(StandardNormal));
        // Σ^{1/2} and Σ^{-1/2} from the eigendecomposition
        let (vals, vecs) = sorted_eigen(&sigma);
        let half = &vecs * DMatrix::from_diagonal(&vals.map(f64::sqrt)) * vecs.transpose();
        let neg_half = &vecs * DMatrix::from_diagonal(&vals.map(|v| 1.0 / v.sqrt())) * vecs.transpose();
        let b = &half * &a;
        let proj = &b * (b.transpose() * &b).try_inverse().unwrap() * b.transpose();
        let want = (proj * (neg_half * &delta)).norm_squared();
        let got = projected_chernoff_quadform(&a, &delta, &sigma).unwrap();
        assert!((got - want).abs() < 1e-10 * want.max(1.0));
    }

    #[test]
    fn pca_counterexample() {
        let sigma = diag(&[4.0, 2.0, 1.0]);
        let delta = vec(&[0.0, 0.0, 1.0]);
        assert!(pca_quadform_closed(&delta, &sigma, 2).unwrap().abs() < 1e-10);
        assert!((lol_quadform_closed(&delta, &sigma, 2).unwrap() - 1.0).abs() < 1e-10);
        assert!((lol_vs_pca_gap(&delta, &sigma, 2).unwrap() - 1.0).abs() < 1e-10);
        assert!((lol_vs_lda_gap(&delta, &sigma, 2).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gap_zero_cases() {
        let sigma = diag(&[5.0, 2.0, 1.0]);
        let u1 = vec(&[1.0, 0.0, 0.0]);
        assert!(lol_vs_lda_gap(&u1, &sigma, 1).unwrap().abs() < 1e-12);
        assert_eq!(lol_vs_pca_gap(&DVector::zeros(3), &sigma, 2).unwrap(), 0.0);
        // δ inside span(U_{d-1}) leaves nothing for the residual direction
        assert!(matches!(lol_vs_lda_gap(&u1, &sigma, 2), Err(Error::DegenerateGamma)));
        // large λ1 along δ: pooled top eigenvector is δ's direction and the gap is small
        let big = diag(&[100.0, 2.0, 1.0]);
        let g = lol_vs_pca_gap(&vec(&[1.0, 0.0, 0.0]), &big, 1).unwrap();
        let a = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let direct = projected_chernoff_quadform(&a, &vec(&[1.0, 0.0, 0.0]), &big).unwrap();
        assert!(g.abs() < 1e-10 && (direct - 0.01).abs() < 1e-12);
    }

    #[test]
    fn sweep_small() {
        let s = gap_sweep(40, 12, RngSeed(1));
        assert!(s.min_lda_gap >= -1e-10, "{s:?}");
        assert!(s.max_lda_rel_err <= 1e-8 && s.max_pca_rel_err <= 1e-8, "{s:?}");
        assert_eq!(s.strictness_violations, 0);
    }

    #[test]
    fn larger_quadform_means_smaller_bayes_error() {
        use crate::classify::bayes_error_two_class;
        use crate::model::{CovMatrix, Covariance};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let sigma = random_pd(6, &mut rng);
            let delta = DVector::<f64>::from_fn(6, |_, _| rng.sample(StandardNormal));
            let model = GaussianModel::new(
                vec![0.5, 0.5],
                vec![DVector::zeros(6), delta.clone()],
                Covariance::Shared { cov: CovMatrix::dense(sigma.clone()) },
            )
            .unwrap();
            let a1 = DMatrix::<f64>::from_fn(6, 2, |_, _| rng.sample(StandardNormal));
            let a2 = DMatrix::<f64>::from_fn(6, 2, |_, _| rng.sample(StandardNormal));
            let (q1, q2) = (
                projected_chernoff_quadform(&a1, &delta, &sigma).unwrap(),
                projected_chernoff_quadform(&a2, &delta, &sigma).unwrap(),
            );
            let (e1, e2) = (
                bayes_error_two_class(&model, Some(&a1)).unwrap(),
                bayes_error_two_class(&model, Some(&a2)).unwrap(),
            );
            assert_eq!(q1 > q2, e1 < e2);
        }
    }
}
