//! Gaussian LDA and QDA on embedded data, and Bayes-error oracles for
//! Gaussian class models.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng as _;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{CovMatrix, GaussianModel};
use crate::par;
use crate::rng::{stream, RngSeed};

/// Relative ridge added to every fitted covariance: `RIDGE * trace / d`.
pub const RIDGE: f64 = 1e-8;

fn check_inputs(x: &DMatrix<f64>, labels: &[usize], num_classes: usize) -> Result<Vec<usize>> {
    let (d, n) = x.shape();
    if labels.len() != n {
        return Err(Error::shape(format!("{n} labels"), format!("{} labels", labels.len())));
    }
    if d > n {
        return Err(Error::UnderdeterminedClassifier { d, n });
    }
    let mut counts = vec![0usize; num_classes];
    for &l in labels {
        if l >= num_classes {
            return Err(Error::InvalidInput(format!("label {l} outside 0..{num_classes}")));
        }
        counts[l] += 1;
    }
    if let Some(c) = counts.iter().position(|&k| k == 0) {
        return Err(Error::EmptyClass(c));
    }
    Ok(counts)
}

fn means_of(x: &DMatrix<f64>, labels: &[usize], counts: &[usize]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(x.nrows(), counts.len());
    for (j, &l) in labels.iter().enumerate() {
        m.column_mut(l).axpy(1.0, &x.column(j), 1.0);
    }
    for (c, &k) in counts.iter().enumerate() {
        m.column_mut(c).scale_mut(1.0 / k as f64);
    }
    m
}

/// Adds `RIDGE * trace / d` (or `RIDGE` when the trace vanishes) and factors.
fn ridge_cholesky(mut cov: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let d = cov.nrows();
    let trace = cov.trace();
    let ridge = if trace > 0.0 { RIDGE * trace / d as f64 } else { RIDGE };
    for i in 0..d {
        cov[(i, i)] += ridge;
    }
    cov.cholesky().ok_or(Error::NotPositiveDefinite)
}

fn log_det(ch: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * ch.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// `(x - mu)ᵀ Σ⁻¹ (x - mu)` through the Cholesky factor.
fn mahalanobis(ch: &Cholesky<f64, Dyn>, diff: &DVector<f64>) -> f64 {
    let l = ch.l_dirty();
    let mut z = diff.clone();
    l.solve_lower_triangular_mut(&mut z);
    z.norm_squared()
}

/// First index of the maximum; ties go to the lowest class.
fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct LdaClassifier {
    pub priors: Vec<f64>,
    /// `d x C`.
    pub means: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl LdaClassifier {
    pub fn d(&self) -> usize {
        self.means.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.priors.len()
    }

    /// Ridge-stabilized pooled within-class covariance.
    pub fn covariance(&self) -> DMatrix<f64> {
        self.chol.l() * self.chol.l().transpose()
    }

    /// `log π_c − ½ (x − μ_c)ᵀ Σ⁻¹ (x − μ_c)` for each class.
    pub fn scores(&self, x: &DVector<f64>) -> Vec<f64> {
        (0..self.num_classes())
            .map(|c| self.priors[c].ln() - 0.5 * mahalanobis(&self.chol, &(x - self.means.column(c))))
            .collect()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<usize>> {
        if x.nrows() != self.d() {
            return Err(Error::shape(format!("{} rows", self.d()), format!("{} rows", x.nrows())));
        }
        Ok(par::map_range(x.ncols(), |j| argmax(&self.scores(&x.column(j).into_owned()))))
    }
}

/// Fit LDA on a `d x n` embedded matrix.
pub fn fit_lda(x: &DMatrix<f64>, labels: &[usize], num_classes: usize) -> Result<LdaClassifier> {
    let counts = check_inputs(x, labels, num_classes)?;
    let n = x.ncols() as f64;
    let means = means_of(x, labels, &counts);
    let mut centered = x.clone();
    for (j, &l) in labels.iter().enumerate() {
        centered.column_mut(j).axpy(-1.0, &means.column(l), 1.0);
    }
    let cov = &centered * centered.transpose() / n;
    Ok(LdaClassifier {
        priors: counts.iter().map(|&k| k as f64 / n).collect(),
        means,
        chol: ridge_cholesky(cov)?,
    })
}

pub fn predict_lda(clf: &LdaClassifier, x: &DMatrix<f64>) -> Result<Vec<usize>> {
    clf.predict(x)
}

#[derive(Debug, Clone)]
pub struct QdaClassifier {
    pub priors: Vec<f64>,
    pub means: DMatrix<f64>,
    chols: Vec<Cholesky<f64, Dyn>>,
    log_dets: Vec<f64>,
}

impl QdaClassifier {
    pub fn d(&self) -> usize {
        self.means.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.priors.len()
    }

    /// Class log densities plus log priors, up to a shared constant.
    pub fn scores(&self, x: &DVector<f64>) -> Vec<f64> {
        (0..self.num_classes())
            .map(|c| {
                self.priors[c].ln()
                    - 0.5 * self.log_dets[c]
                    - 0.5 * mahalanobis(&self.chols[c], &(x - self.means.column(c)))
            })
            .collect()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<usize>> {
        if x.nrows() != self.d() {
            return Err(Error::shape(format!("{} rows", self.d()), format!("{} rows", x.nrows())));
        }
        Ok(par::map_range(x.ncols(), |j| argmax(&self.scores(&x.column(j).into_owned()))))
    }
}

pub fn fit_qda(x: &DMatrix<f64>, labels: &[usize], num_classes: usize) -> Result<QdaClassifier> {
    let counts = check_inputs(x, labels, num_classes)?;
    let n = x.ncols() as f64;
    let d = x.nrows();
    let means = means_of(x, labels, &counts);
    let mut covs = vec![DMatrix::<f64>::zeros(d, d); num_classes];
    for (j, &l) in labels.iter().enumerate() {
        let diff = x.column(j) - means.column(l);
        covs[l].ger(1.0 / counts[l] as f64, &diff, &diff, 1.0);
    }
    // a class with a single sample (or constant data) borrows the pooled scale for its ridge
    let pooled_trace: f64 = covs.iter().zip(&counts).map(|(c, &k)| c.trace() * k as f64).sum::<f64>() / n;
    let mut chols = Vec::with_capacity(num_classes);
    let mut log_dets = Vec::with_capacity(num_classes);
    for mut cov in covs {
        if cov.trace() <= 0.0 && pooled_trace > 0.0 {
            for i in 0..d {
                cov[(i, i)] += RIDGE * pooled_trace / d as f64;
            }
        }
        let ch = ridge_cholesky(cov)?;
        log_dets.push(log_det(&ch));
        chols.push(ch);
    }
    Ok(QdaClassifier {
        priors: counts.iter().map(|&k| k as f64 / n).collect(),
        means,
        chols,
        log_dets,
    })
}

pub fn predict_qda(clf: &QdaClassifier, x: &DMatrix<f64>) -> Result<Vec<usize>> {
    clf.predict(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Lda,
    Qda,
}

/// Fit then predict with either classifier.
pub fn fit_predict(
    kind: ClassifierKind,
    train: &DMatrix<f64>,
    labels: &[usize],
    num_classes: usize,
    test: &DMatrix<f64>,
) -> Result<Vec<usize>> {
    match kind {
        ClassifierKind::Lda => fit_lda(train, labels, num_classes)?.predict(test),
        ClassifierKind::Qda => fit_qda(train, labels, num_classes)?.predict(test),
    }
}

/// Fraction of positions where `pred` and `truth` differ.
pub fn misclassification_rate(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::shape(format!("{} predictions", truth.len()), format!("{}", pred.len())));
    }
    if pred.is_empty() {
        return Err(Error::InvalidInput("no predictions to score".into()));
    }
    let wrong = pred.iter().zip(truth).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / pred.len() as f64)
}

/// `δᵀ Σ⁻¹ δ` for a structured covariance, without projection.
pub(crate) fn mahalanobis_sq(cov: &CovMatrix, delta: &DVector<f64>) -> Result<f64> {
    match cov {
        CovMatrix::Diagonal { diag } => {
            let mut q = 0.0;
            for (d, v) in diag.iter().zip(delta.iter()) {
                if *v != 0.0 {
                    if !(*d > 0.0) {
                        return Err(Error::SingularProjectedCov);
                    }
                    q += v * v / d;
                }
            }
            Ok(q)
        }
        _ => {
            let ch = cov.to_dense().cholesky().ok_or(Error::SingularProjectedCov)?;
            Ok(mahalanobis(&ch, delta))
        }
    }
}

/// `Φ(−√(δ_Aᵀ Σ_A⁻¹ δ_A) / 2)` for a two-class, equal-prior, shared-covariance
/// model, optionally after projecting onto the columns of `proj`.
pub fn bayes_error_two_class(model: &GaussianModel, proj: Option<&DMatrix<f64>>) -> Result<f64> {
    if model.num_classes() != 2 {
        return Err(Error::InvalidInput("closed-form Bayes error needs two classes".into()));
    }
    if (model.priors[0] - model.priors[1]).abs() > 1e-12 {
        return Err(Error::InvalidInput("closed-form Bayes error needs equal priors".into()));
    }
    let cov = model
        .shared_cov()
        .ok_or_else(|| Error::InvalidInput("closed-form Bayes error needs a shared covariance".into()))?;
    let delta = model.mean(1) - model.mean(0);
    let q = match proj {
        None => mahalanobis_sq(cov, &delta)?,
        Some(a) => {
            if a.nrows() != model.p() {
                return Err(Error::shape(format!("{} rows", model.p()), format!("{} rows", a.nrows())));
            }
            let da = a.tr_mul(&delta);
            if da.iter().all(|v| *v == 0.0) {
                0.0
            } else {
                let ch = cov.project(a).cholesky().ok_or(Error::SingularProjectedCov)?;
                mahalanobis(&ch, &da)
            }
        }
    };
    Ok(standard_normal_cdf(-q.max(0.0).sqrt() / 2.0))
}

pub(crate) fn standard_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Samples per Monte Carlo chunk; each chunk has its own derived stream.
pub const MC_CHUNK: usize = 4096;

enum Density {
    Diagonal { mean: DVector<f64>, inv_var: DVector<f64>, log_det: f64 },
    Dense { mean: DVector<f64>, chol: Cholesky<f64, Dyn>, log_det: f64 },
}

impl Density {
    fn log_density(&self, x: &[f64]) -> f64 {
        match self {
            Density::Diagonal { mean, inv_var, log_det } => {
                let mut q = 0.0;
                for i in 0..mean.len() {
                    let d = x[i] - mean[i];
                    q += d * d * inv_var[i];
                }
                -0.5 * (q + log_det)
            }
            Density::Dense { mean, chol, log_det } => {
                let diff = DVector::from_column_slice(x) - mean;
                -0.5 * (mahalanobis(chol, &diff) + log_det)
            }
        }
    }
}

/// Bayes error of the optimal rule for `model` restricted to `span(proj)`,
/// estimated by sampling. Works for any number of classes and per-class
/// covariances.
pub fn bayes_error_monte_carlo(
    model: &GaussianModel,
    proj: Option<&DMatrix<f64>>,
    n_samples: usize,
    seed: RngSeed,
) -> Result<MonteCarloEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("Monte Carlo needs at least one sample".into()));
    }
    let c = model.num_classes();
    let mut means = Vec::with_capacity(c);
    let mut covs = Vec::with_capacity(c);
    for k in 0..c {
        match proj {
            None => {
                means.push(model.mean(k));
                covs.push(model.cov(k).clone());
            }
            Some(a) => {
                if a.nrows() != model.p() {
                    return Err(Error::shape(format!("{} rows", model.p()), format!("{} rows", a.nrows())));
                }
                means.push(a.tr_mul(&model.mean(k)));
                covs.push(CovMatrix::dense(model.cov(k).project(a)));
            }
        }
    }
    let mut densities = Vec::with_capacity(c);
    let mut factors = Vec::with_capacity(c);
    for k in 0..c {
        factors.push(covs[k].factor()?);
        densities.push(match &covs[k] {
            CovMatrix::Diagonal { diag } => {
                if diag.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::NotPositiveDefinite);
                }
                Density::Diagonal {
                    mean: means[k].clone(),
                    inv_var: DVector::from_iterator(diag.len(), diag.iter().map(|v| 1.0 / v)),
                    log_det: diag.iter().map(|v| v.ln()).sum(),
                }
            }
            other => {
                let chol = other.to_dense().cholesky().ok_or(Error::NotPositiveDefinite)?;
                let log_det = log_det(&chol);
                Density::Dense {
                    mean: means[k].clone(),
                    chol,
                    log_det,
                }
            }
        });
    }
    let log_priors: Vec<f64> = model.priors.iter().map(|p| p.ln()).collect();
    let mut cum = Vec::with_capacity(c);
    let mut acc = 0.0;
    for p in &model.priors {
        acc += p;
        cum.push(acc);
    }
    let dim = means[0].len();
    let chunks = n_samples.div_ceil(MC_CHUNK);
    let errors: Vec<usize> = par::map_range(chunks, |chunk| {
        let mut rng = seed.derive_rng(stream::MONTE_CARLO, chunk as u64);
        let count = MC_CHUNK.min(n_samples - chunk * MC_CHUNK);
        let mut x = vec![0.0; dim];
        let mut z = Vec::new();
        let mut scores = vec![0.0; c];
        let mut wrong = 0;
        for _ in 0..count {
            let u: f64 = rng.random();
            let y = cum.iter().position(|&t| u < t).unwrap_or(c - 1);
            z.clear();
            z.extend((0..factors[y].noise_dim()).map(|_| rng.sample::<f64, _>(StandardNormal)));
            factors[y].draw(means[y].as_slice(), &z, &mut x);
            for k in 0..c {
                scores[k] = log_priors[k] + densities[k].log_density(&x);
            }
            if argmax(&scores) != y {
                wrong += 1;
            }
        }
        wrong
    });
    let estimate = errors.iter().sum::<usize>() as f64 / n_samples as f64;
    Ok(MonteCarloEstimate {
        estimate,
        std_error: (estimate * (1.0 - estimate) / n_samples as f64).sqrt(),
        n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Covariance;
    use rand::SeedableRng;

    fn gaussian(p: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(p, n, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn symmetric_threshold_at_zero() {
        let x = DMatrix::from_row_slice(1, 4, &[-1.5, -0.5, 0.5, 1.5]);
        let clf = fit_lda(&x, &[0, 0, 1, 1], 2).unwrap();
        // discriminant difference is linear; locate its root
        let f = |v: f64| {
            let s = clf.scores(&DVector::from_element(1, v));
            s[1] - s[0]
        };
        let (a, b) = (f(-1.0), f(1.0));
        let root = -1.0 - a * 2.0 / (b - a);
        assert!(root.abs() < 1e-10);
        assert_eq!(clf.predict(&DMatrix::from_row_slice(1, 2, &[-0.01, 0.01])).unwrap(), vec![0, 1]);
    }

    #[test]
    fn isotropic_lda_is_nearest_mean() {
        let mut x = gaussian(2, 400, 1);
        let labels: Vec<usize> = (0..400).map(|i| i % 2).collect();
        for (j, &l) in labels.iter().enumerate() {
            x[(0, j)] += 3.0 * l as f64;
        }
        let clf = fit_lda(&x, &labels, 2).unwrap();
        let cov = clf.covariance();
        let test = gaussian(2, 200, 2) * 2.0;
        let pred = clf.predict(&test).unwrap();
        let chol = cov.clone().cholesky().unwrap();
        for (j, &pr) in pred.iter().enumerate() {
            let x = test.column(j).into_owned();
            let d: Vec<f64> = (0..2).map(|c| mahalanobis(&chol, &(&x - clf.means.column(c)))).collect();
            let expected = if d[1] - 2.0 * clf.priors[1].ln() < d[0] - 2.0 * clf.priors[0].ln() { 1 } else { 0 };
            assert_eq!(pr, expected);
        }
    }

    #[test]
    fn lda_hand_computed() {
        // six points, two classes, 2-D correlated
        let x = DMatrix::from_column_slice(2, 6, &[0.0, 0.0, 1.0, 1.0, 2.0, 1.0, 3.0, 3.0, 4.0, 5.0, 5.0, 4.0]);
        let labels = [0, 0, 0, 1, 1, 1];
        let clf = fit_lda(&x, &labels, 2).unwrap();
        // hand: means (1, 2/3) and (4, 4); within scatter / 6
        assert!((clf.means[(0, 0)] - 1.0).abs() < 1e-12 && (clf.means[(1, 0)] - 2.0 / 3.0).abs() < 1e-12);
        let mut s = DMatrix::<f64>::zeros(2, 2);
        for j in 0..6 {
            let diff = x.column(j) - clf.means.column(labels[j]);
            s += &diff * diff.transpose();
        }
        s /= 6.0;
        let ridge = RIDGE * s.trace() / 2.0;
        let sr = &s + DMatrix::identity(2, 2) * ridge;
        assert!((clf.covariance() - &sr).amax() < 1e-12);
        let inv = sr.try_inverse().unwrap();
        let probe = DVector::from_vec(vec![2.5, 2.0]);
        let s0 = 0.5f64.ln() - 0.5 * (&probe - clf.means.column(0)).dot(&(&inv * (&probe - clf.means.column(0))));
        let s1 = 0.5f64.ln() - 0.5 * (&probe - clf.means.column(1)).dot(&(&inv * (&probe - clf.means.column(1))));
        let got = clf.scores(&probe);
        assert!((got[0] - s0).abs() < 1e-8 && (got[1] - s1).abs() < 1e-8);
    }

    #[test]
    fn ties_and_priors() {
        let x = DMatrix::from_row_slice(1, 5, &[-1.0, -1.0, -1.0, 1.0, 1.0]);
        let x = x + DMatrix::from_row_slice(1, 5, &[0.1, -0.1, 0.0, 0.1, -0.1]);
        let labels = [0, 0, 0, 1, 1];
        let lda = fit_lda(&x, &labels, 2).unwrap();
        let mid = DMatrix::from_element(1, 1, (lda.means[(0, 0)] + lda.means[(0, 1)]) / 2.0);
        assert_eq!(lda.predict(&mid).unwrap(), vec![0]);
        let at_mean = DMatrix::from_element(1, 1, lda.means[(0, 1)]);
        assert_eq!(lda.predict(&at_mean).unwrap(), vec![1]);
        assert_eq!(argmax(&[1.0, 1.0, 0.5]), 0);
        let qda = fit_qda(&x, &labels, 2).unwrap();
        assert_eq!(qda.predict(&DMatrix::from_element(1, 1, lda.means[(0, 0)])).unwrap(), vec![0]);
    }

    #[test]
    fn qda_matches_brute_force_density() {
        let mut x = gaussian(3, 60, 4);
        let labels: Vec<usize> = (0..60).map(|i| i % 3).collect();
        for (j, &l) in labels.iter().enumerate() {
            x[(l, j)] *= 3.0;
            x[(0, j)] += l as f64;
        }
        let qda = fit_qda(&x, &labels, 3).unwrap();
        let test = gaussian(3, 100, 5) * 2.0;
        let pred = qda.predict(&test).unwrap();
        for (j, &pr) in pred.iter().enumerate() {
            let xj = test.column(j).into_owned();
            let mut best = (f64::NEG_INFINITY, 0);
            for c in 0..3 {
                let idx: Vec<usize> = (0..60).filter(|&i| labels[i] == c).collect();
                let m = qda.means.column(c).into_owned();
                let mut s = DMatrix::<f64>::zeros(3, 3);
                for &i in &idx {
                    let diff = x.column(i) - &m;
                    s += &diff * diff.transpose();
                }
                s /= idx.len() as f64;
                let r = RIDGE * s.trace() / 3.0;
                s += DMatrix::identity(3, 3) * r;
                let diff = &xj - &m;
                let dens = (1.0 / 3.0f64).ln() - 0.5 * s.determinant().ln()
                    - 0.5 * diff.dot(&(s.try_inverse().unwrap() * &diff));
                if dens > best.0 {
                    best = (dens, c);
                }
            }
            assert_eq!(pr, best.1);
        }
    }

    #[test]
    fn underdetermined_rejected() {
        let x = gaussian(5, 3, 0);
        assert!(matches!(fit_lda(&x, &[0, 1, 0], 2), Err(Error::UnderdeterminedClassifier { d: 5, n: 3 })));
        let clf = fit_lda(&gaussian(2, 10, 1), &[0, 1, 0, 1, 0, 1, 0, 1, 0, 1], 2).unwrap();
        assert!(matches!(clf.predict(&gaussian(3, 2, 0)), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn rates() {
        assert_eq!(misclassification_rate(&[0, 1, 1], &[0, 1, 1]).unwrap(), 0.0);
        assert_eq!(misclassification_rate(&[1, 0, 1], &[0, 1, 0]).unwrap(), 1.0);
        let pred = [0, 0, 0, 1, 1, 1, 0, 0, 0, 0];
        let truth = [0, 0, 0, 1, 1, 1, 1, 1, 1, 0];
        assert!((misclassification_rate(&pred, &truth).unwrap() - 0.3).abs() < 1e-15);
    }

    fn model(delta: &[f64], cov: CovMatrix) -> GaussianModel {
        let p = delta.len();
        GaussianModel::new(
            vec![0.5, 0.5],
            vec![DVector::zeros(p), DVector::from_column_slice(delta)],
            Covariance::Shared { cov },
        )
        .unwrap()
    }

    #[test]
    fn closed_form_bayes() {
        let m = model(&[2.0, 0.0], CovMatrix::diagonal(DVector::from_element(2, 1.0)));
        assert!((bayes_error_two_class(&m, None).unwrap() - 0.158655).abs() < 1e-6);
        let z = model(&[0.0, 0.0], CovMatrix::diagonal(DVector::from_element(2, 1.0)));
        assert_eq!(bayes_error_two_class(&z, None).unwrap(), 0.5);
        // projection onto a direction orthogonal to δ is chance
        let a = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        assert_eq!(bayes_error_two_class(&m, Some(&a)).unwrap(), 0.5);
    }

    #[test]
    fn monte_carlo_agrees_with_closed_form() {
        let m = model(&[2.0, 0.5, 0.0], CovMatrix::dense(DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.2, 0.0, 0.2, 1.5])));
        let exact = bayes_error_two_class(&m, None).unwrap();
        let mc = bayes_error_monte_carlo(&m, None, 100_000, RngSeed(3)).unwrap();
        assert!((mc.estimate - exact).abs() <= 3.0 * mc.std_error, "{} vs {exact}", mc.estimate);
        let again = bayes_error_monte_carlo(&m, None, 100_000, RngSeed(3)).unwrap();
        assert_eq!(mc, again);
        let a = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let exact_a = bayes_error_two_class(&m, Some(&a)).unwrap();
        let mc_a = bayes_error_monte_carlo(&m, Some(&a), 100_000, RngSeed(4)).unwrap();
        assert!((mc_a.estimate - exact_a).abs() <= 3.0 * mc_a.std_error);
    }

    #[test]
    fn monte_carlo_symmetric_variance_problem() {
        // equal means, variances 1 and 4: the Bayes rule picks class 1 when |x| > t,
        // t = sqrt(8 ln 2 / 3)
        let m = GaussianModel::new(
            vec![0.5, 0.5],
            vec![DVector::zeros(1), DVector::zeros(1)],
            Covariance::PerClass {
                covs: vec![CovMatrix::diagonal(DVector::from_element(1, 1.0)), CovMatrix::diagonal(DVector::from_element(1, 4.0))],
            },
        )
        .unwrap();
        let t = (8.0 * 2f64.ln() / 3.0).sqrt();
        let phi = standard_normal_cdf;
        let exact = 0.5 * (2.0 * phi(-t)) + 0.5 * (1.0 - 2.0 * phi(-t / 2.0));
        let mc = bayes_error_monte_carlo(&m, None, 200_000, RngSeed(1)).unwrap();
        assert!((mc.estimate - exact).abs() <= 3.0 * mc.std_error);
    }

    #[test]
    fn optimal_projection_reproduces_bayes_rule() {
        // A = Σ⁻¹δ, then LDA with population parameters on the 1-D embedding
        let sigma = DMatrix::from_row_slice(3, 3, &[2.0, 0.4, 0.1, 0.4, 1.0, 0.0, 0.1, 0.0, 0.5]);
        let mu1 = DVector::from_vec(vec![1.0, -0.5, 0.3]);
        let inv = sigma.clone().try_inverse().unwrap();
        let a = &inv * &mu1;
        let test = gaussian(3, 500, 9);
        for j in 0..500 {
            let x = test.column(j);
            let full = (&x - &mu1).dot(&(&inv * (&x - &mu1))) < x.dot(&(&inv * x));
            let e = a.dot(&x);
            let mid = a.dot(&mu1) / 2.0;
            assert_eq!(full, e > mid);
        }
    }
}
