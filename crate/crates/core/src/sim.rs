//! Synthetic Gaussian benchmark settings.
//!
//! Each sampler returns the data together with the exact population model it
//! was drawn from, so Bayes errors and Chernoff quantities can be computed for
//! the same setting.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::classify::{bayes_error_monte_carlo, bayes_error_two_class};
use crate::error::{Error, Result};
use crate::linalg::{descending_order, random_rotation};
use crate::model::{CovFactor, CovMatrix, Covariance, DataMatrix, GaussianModel, LabeledDataset};
use crate::par;
use crate::rng::{stream, RngSeed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    StackedCigars,
    Trunk,
    RotatedTrunk,
    Trunk3,
    Robust,
    Cross,
    ToeplitzDiag,
    ToeplitzDense,
    RegressionLinear,
    /// Identity covariance with the mean difference spread evenly over all
    /// coordinates.
    Spherical,
}

impl Family {
    pub const ALL: [Family; 10] = [
        Family::StackedCigars,
        Family::Trunk,
        Family::RotatedTrunk,
        Family::Trunk3,
        Family::Robust,
        Family::Cross,
        Family::ToeplitzDiag,
        Family::ToeplitzDense,
        Family::RegressionLinear,
        Family::Spherical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::StackedCigars => "stacked_cigars",
            Family::Trunk => "trunk",
            Family::RotatedTrunk => "rotated_trunk",
            Family::Trunk3 => "trunk3",
            Family::Robust => "robust",
            Family::Cross => "cross",
            Family::ToeplitzDiag => "toeplitz_diag",
            Family::ToeplitzDense => "toeplitz_dense",
            Family::RegressionLinear => "regression_linear",
            Family::Spherical => "spherical",
        }
    }

    pub fn num_classes(self) -> usize {
        match self {
            Family::Trunk3 => 3,
            Family::RegressionLinear => 0,
            _ => 2,
        }
    }

    fn min_p(self) -> usize {
        match self {
            Family::StackedCigars | Family::Robust | Family::RegressionLinear => 2,
            Family::Cross => 3,
            _ => 1,
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        let alias = match norm.as_str() {
            "cigars" => "stacked_cigars",
            "rotated" => "rotated_trunk",
            "trunk_3" | "3class" | "three_class" => "trunk3",
            "toeplitz" => "toeplitz_diag",
            "regression" => "regression_linear",
            other => other,
        };
        Family::ALL
            .into_iter()
            .find(|f| f.name() == alias)
            .ok_or_else(|| Error::InvalidInput(format!("unknown family '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LabelScheme {
    /// Labels drawn independently from the class priors; redrawn until every
    /// class is present.
    #[default]
    Iid,
    /// Sample `i` gets label `i mod C`.
    Balanced,
}

/// Default mean-difference norm of the spherical family. At `p = 100`,
/// `n = 2000` the pooled-covariance spike `‖δ‖²/4 = 0.16` stays below the
/// `√(p/n) ≈ 0.22` edge where sample eigenvectors start to align with it, which
/// is the regime of large-`p` data where PCA cannot see the mean difference.
pub const SPHERICAL_SEPARATION: f64 = 0.8;

/// A fully specified simulation setting. Unset shape parameters take the
/// family defaults (see [`SimSpec::a`] and [`SimSpec::b`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub family: Family,
    pub p: usize,
    pub n: usize,
    pub seed: RngSeed,
    /// Seed for population-level randomness (rotations, mean directions).
    /// `None` reuses `seed`; set it to draw fresh samples from a fixed model.
    pub model_seed: Option<RngSeed>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// Toeplitz decay, in `(0, 1)`.
    pub rho: f64,
    /// Norm of the mean shift in the Toeplitz families.
    pub signal: f64,
    /// Norm of the mean difference in the spherical family.
    pub separation: f64,
    pub inlier_fraction: f64,
    pub frobenius: f64,
    /// Standard deviation of additive noise on the regression target.
    pub noise: f64,
    pub labels: LabelScheme,
    /// Test hook: use `Q = I` instead of a random rotation.
    pub identity_rotation: bool,
}

impl SimSpec {
    pub fn new(family: Family, p: usize, n: usize, seed: impl Into<RngSeed>) -> Self {
        SimSpec {
            family,
            p,
            n,
            seed: seed.into(),
            model_seed: None,
            a: None,
            b: None,
            rho: 0.5,
            signal: 1.0,
            separation: SPHERICAL_SEPARATION,
            inlier_fraction: 0.7,
            frobenius: 50.0,
            noise: 0.0,
            labels: LabelScheme::Iid,
            identity_rotation: false,
        }
    }

    pub fn with_seed(&self, seed: impl Into<RngSeed>) -> Self {
        SimSpec {
            seed: seed.into(),
            ..self.clone()
        }
    }

    pub fn with_n(&self, n: usize) -> Self {
        SimSpec { n, ..self.clone() }
    }

    /// Pins the population model to the current seed, so that
    /// [`SimSpec::with_seed`] only changes the sample.
    pub fn pinned(&self) -> Self {
        SimSpec {
            model_seed: Some(self.model_seed()),
            ..self.clone()
        }
    }

    pub fn model_seed(&self) -> RngSeed {
        self.model_seed.unwrap_or(self.seed)
    }

    pub fn a(&self) -> f64 {
        self.a.unwrap_or(match self.family {
            Family::StackedCigars => 0.15,
            _ => 1.0,
        })
    }

    pub fn b(&self) -> f64 {
        self.b.unwrap_or(match self.family {
            Family::Cross => 0.25,
            _ => 4.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < self.family.min_p() {
            return Err(Error::PTooSmall {
                p: self.p,
                min: self.family.min_p(),
            });
        }
        if self.n == 0 {
            return Err(Error::InvalidInput("n must be positive".into()));
        }
        if matches!(
            self.family,
            Family::ToeplitzDiag | Family::ToeplitzDense | Family::RegressionLinear
        ) && !(self.rho > 0.0 && self.rho < 1.0)
        {
            return Err(Error::BadRho(self.rho));
        }
        let positive = [self.a(), self.b(), self.frobenius];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput("family parameters must be positive".into()));
        }
        if !(self.inlier_fraction > 0.0 && self.inlier_fraction <= 1.0) {
            return Err(Error::InvalidInput("inlier fraction must lie in (0, 1]".into()));
        }
        if !self.signal.is_finite() || !self.separation.is_finite() || !(self.noise >= 0.0) {
            return Err(Error::InvalidInput("signal, separation and noise must be finite".into()));
        }
        if self.family != Family::RegressionLinear && self.labels == LabelScheme::Iid && self.n < self.family.num_classes() {
            return Err(Error::InvalidInput(format!(
                "n = {} cannot cover {} classes",
                self.n,
                self.family.num_classes()
            )));
        }
        Ok(())
    }
}

/// Labelled sample plus its population model.
#[derive(Debug, Clone)]
pub struct ClassSample {
    pub dataset: LabeledDataset,
    pub model: GaussianModel,
    /// Robust family only: which samples came from the outlier component.
    pub outliers: Option<Vec<bool>>,
}

impl ClassSample {
    /// Samples that are not outliers (the whole dataset for other families).
    pub fn inliers(&self) -> Result<LabeledDataset> {
        match &self.outliers {
            None => Ok(self.dataset.clone()),
            Some(mask) => {
                let idx: Vec<usize> = (0..mask.len()).filter(|&i| !mask[i]).collect();
                self.dataset.subset(&idx)
            }
        }
    }
}

/// `y = βᵀx + noise`, `x ~ N(0, Σ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub beta: Vec<f64>,
    pub cov: CovMatrix,
    pub noise: f64,
}

#[derive(Debug, Clone)]
pub struct RegressionSample {
    pub x: DataMatrix,
    pub y: Vec<f64>,
    pub model: LinearModel,
}

#[derive(Debug, Clone)]
pub enum Sample {
    Classification(ClassSample),
    Regression(RegressionSample),
}

pub fn trunk_mean(p: usize, b: f64) -> DVector<f64> {
    DVector::from_fn(p, |i, _| b / ((2 * i + 1) as f64).sqrt())
}

pub fn trunk_diag(p: usize) -> DVector<f64> {
    DVector::from_fn(p, |i, _| 100.0 / ((p - i) as f64).sqrt())
}

/// `ρ^|i−j|` rescaled to the requested Frobenius norm.
pub fn toeplitz(p: usize, rho: f64, frobenius: f64) -> DMatrix<f64> {
    let t = DMatrix::from_fn(p, p, |i, j| rho.powi(i.abs_diff(j) as i32));
    let scale = frobenius / t.norm();
    t * scale
}

fn toeplitz_spectrum(p: usize, rho: f64, frobenius: f64) -> DVector<f64> {
    let eig = SymmetricEigen::new(toeplitz(p, rho, frobenius));
    let order = descending_order(eig.eigenvalues.as_slice());
    DVector::from_iterator(p, order.iter().map(|&i| eig.eigenvalues[i].max(0.0)))
}

fn shared(priors: Vec<f64>, means: Vec<DVector<f64>>, cov: CovMatrix) -> Result<GaussianModel> {
    GaussianModel::new(priors, means, Covariance::Shared { cov })
}

fn rotation_for(spec: &SimSpec) -> DMatrix<f64> {
    if spec.identity_rotation {
        DMatrix::identity(spec.p, spec.p)
    } else {
        random_rotation(spec.p, spec.model_seed())
    }
}

/// Population model of a classification family. Robust returns the inlier
/// model; its outlier component is [`robust_outlier_cov`].
pub fn population_model(spec: &SimSpec) -> Result<GaussianModel> {
    spec.validate()?;
    let p = spec.p;
    let (a, b) = (spec.a(), spec.b());
    let half = vec![0.5, 0.5];
    match spec.family {
        Family::StackedCigars => {
            let mut mu1 = DVector::from_element(p, a);
            mu1[1] = b;
            let mut diag = DVector::from_element(p, 1.0);
            diag[1] = b;
            shared(half, vec![DVector::zeros(p), mu1], CovMatrix::diagonal(diag))
        }
        Family::Trunk => {
            let mu0 = trunk_mean(p, b);
            shared(half, vec![mu0.clone(), -mu0], CovMatrix::diagonal(trunk_diag(p)))
        }
        Family::RotatedTrunk => {
            let q = rotation_for(spec);
            let mu0 = &q * trunk_mean(p, b);
            let mut scaled = q.clone();
            for (j, d) in trunk_diag(p).iter().enumerate() {
                scaled.column_mut(j).scale_mut(*d);
            }
            let mut sigma = scaled * q.transpose();
            sigma = (&sigma + sigma.transpose()) * 0.5;
            shared(half, vec![mu0.clone(), -mu0], CovMatrix::dense(sigma))
        }
        Family::Trunk3 => {
            let mu0 = trunk_mean(p, b);
            shared(
                vec![1.0 / 3.0; 3],
                vec![mu0.clone(), -mu0, DVector::zeros(p)],
                CovMatrix::diagonal(trunk_diag(p)),
            )
        }
        Family::Robust => {
            let mut mu0 = DVector::zeros(p);
            for i in 0..p / 2 {
                mu0[i] = b / ((2 * i + 1) as f64).sqrt();
            }
            let diag = DVector::from_fn(p, |i, _| b.powi(3) / ((i + 1) as f64).sqrt());
            shared(half, vec![mu0.clone(), -mu0], CovMatrix::diagonal(diag))
        }
        Family::Cross => {
            let t = p / 3;
            let d0 = DVector::from_fn(p, |i, _| if i < t { a } else { b });
            let d1 = DVector::from_fn(p, |i, _| if (t..2 * t).contains(&i) { a } else { b });
            GaussianModel::new(
                half,
                vec![DVector::zeros(p), DVector::zeros(p)],
                Covariance::PerClass {
                    covs: vec![CovMatrix::diagonal(d0), CovMatrix::diagonal(d1)],
                },
            )
        }
        Family::ToeplitzDiag | Family::ToeplitzDense => {
            let lambda = toeplitz_spectrum(p, spec.rho, spec.frobenius);
            let mut rng = spec.model_seed().derive_rng(stream::MEAN_DIRECTION, 0);
            let z = DVector::<f64>::from_fn(p, |_, _| rng.sample(StandardNormal));
            let mu1 = z.normalize() * spec.signal;
            let cov = if spec.family == Family::ToeplitzDiag {
                CovMatrix::diagonal(lambda)
            } else {
                let q = rotation_for(spec);
                let mut scaled = q.clone();
                for (j, d) in lambda.iter().enumerate() {
                    scaled.column_mut(j).scale_mut(*d);
                }
                let s = scaled * q.transpose();
                CovMatrix::dense((&s + s.transpose()) * 0.5)
            };
            shared(half, vec![DVector::zeros(p), mu1], cov)
        }
        Family::Spherical => {
            let delta = DVector::from_element(p, spec.separation / (p as f64).sqrt());
            shared(half, vec![&delta * -0.5, &delta * 0.5], CovMatrix::diagonal(DVector::from_element(p, 1.0)))
        }
        Family::RegressionLinear => Err(Error::InvalidInput("regression family has no class model".into())),
    }
}

/// Outlier covariance of the robust family: diagonal `b⁶ / √(1..p)`.
pub fn robust_outlier_cov(spec: &SimSpec) -> CovMatrix {
    let b = spec.b();
    CovMatrix::diagonal(DVector::from_fn(spec.p, |i, _| b.powi(6) / ((i + 1) as f64).sqrt()))
}

pub fn linear_model(spec: &SimSpec) -> Result<LinearModel> {
    spec.validate()?;
    let mut beta = vec![0.0; spec.p];
    beta[0] = 1.0;
    beta[1] = 1.0;
    Ok(LinearModel {
        beta,
        cov: CovMatrix::dense(toeplitz(spec.p, spec.rho, spec.frobenius)),
        noise: spec.noise,
    })
}

fn draw_labels(spec: &SimSpec, priors: &[f64]) -> Vec<usize> {
    let c = priors.len();
    match spec.labels {
        LabelScheme::Balanced => (0..spec.n).map(|i| i % c).collect(),
        LabelScheme::Iid => {
            let mut rng = spec.seed.derive_rng(stream::LABELS, 0);
            loop {
                let labels: Vec<usize> = (0..spec.n)
                    .map(|_| {
                        let u: f64 = rng.random();
                        let mut acc = 0.0;
                        for (k, p) in priors.iter().enumerate() {
                            acc += p;
                            if u < acc {
                                return k;
                            }
                        }
                        c - 1
                    })
                    .collect();
                let mut seen = vec![false; c];
                labels.iter().for_each(|&l| seen[l] = true);
                if seen.iter().all(|s| *s) {
                    return labels;
                }
            }
        }
    }
}

/// Columns per parallel sampling task.
const SAMPLE_BLOCK: usize = 16;

/// Draws column `j` from `(means[pick(j)], factors[pick(j)])` with the
/// per-column stream `(SAMPLE_COLUMN, j)`.
fn draw_columns(p: usize, n: usize, seed: RngSeed, means: &[DVector<f64>], factors: &[CovFactor], pick: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::<f64>::zeros(p, n);
    par::for_each_chunk_mut(par::Exec::default(), out.as_mut_slice(), p * SAMPLE_BLOCK, |blk, chunk| {
        let mut z = Vec::new();
        for (k, col) in chunk.chunks_mut(p).enumerate() {
            let j = blk * SAMPLE_BLOCK + k;
            let which = pick[j];
            let mut rng = seed.derive_rng(stream::SAMPLE_COLUMN, j as u64);
            z.clear();
            z.extend((0..factors[which].noise_dim()).map(|_| rng.sample::<f64, _>(StandardNormal)));
            factors[which].draw(means[which].as_slice(), &z, col);
        }
    });
    out
}

pub fn sample_classification(spec: &SimSpec) -> Result<ClassSample> {
    let model = population_model(spec)?;
    let c = model.num_classes();
    let labels = draw_labels(spec, &model.priors);
    let p = spec.p;

    // components: one per class, plus the outlier component for Robust
    let mut means: Vec<DVector<f64>> = (0..c).map(|k| model.mean(k)).collect();
    let mut factors: Vec<CovFactor> = (0..c).map(|k| model.cov(k).factor()).collect::<Result<_>>()?;
    let mut pick = labels.clone();
    let mut outliers = None;
    if spec.family == Family::Robust {
        means.push(DVector::zeros(p));
        factors.push(robust_outlier_cov(spec).factor()?);
        let mut rng = spec.seed.derive_rng(stream::OUTLIERS, 0);
        let mask: Vec<bool> = (0..spec.n).map(|_| rng.random::<f64>() >= spec.inlier_fraction).collect();
        for (j, &o) in mask.iter().enumerate() {
            if o {
                pick[j] = c;
            }
        }
        outliers = Some(mask);
    }

    let x = if spec.family == Family::RotatedTrunk {
        // draw in the Trunk frame, then rotate
        let base = population_model(&SimSpec {
            family: Family::Trunk,
            ..spec.clone()
        })?;
        let bm: Vec<DVector<f64>> = (0..c).map(|k| base.mean(k)).collect();
        let bf: Vec<CovFactor> = (0..c).map(|k| base.cov(k).factor()).collect::<Result<_>>()?;
        let raw = draw_columns(p, spec.n, spec.seed, &bm, &bf, &pick);
        par::matmul(&rotation_for(spec), &raw)
    } else {
        draw_columns(p, spec.n, spec.seed, &means, &factors, &pick)
    };
    let dataset = LabeledDataset::new(DataMatrix::new(x)?, labels, c)?;
    Ok(ClassSample {
        dataset,
        model,
        outliers,
    })
}

pub fn sample_regression(spec: &SimSpec) -> Result<RegressionSample> {
    if spec.family != Family::RegressionLinear {
        return Err(Error::InvalidInput(format!("{} is not a regression family", spec.family.name())));
    }
    let model = linear_model(spec)?;
    let factor = model.cov.factor()?;
    let pick = vec![0usize; spec.n];
    let x = draw_columns(spec.p, spec.n, spec.seed, &[DVector::zeros(spec.p)], &[factor], &pick);
    let beta = DVector::from_column_slice(&model.beta);
    let mut rng = spec.seed.derive_rng(stream::REPLICATE, u64::MAX);
    let y = (0..spec.n)
        .map(|j| {
            let e: f64 = rng.sample(StandardNormal);
            beta.dot(&x.column(j)) + model.noise * e
        })
        .collect();
    Ok(RegressionSample {
        x: DataMatrix::new(x)?,
        y,
        model,
    })
}

pub fn sample(spec: &SimSpec) -> Result<Sample> {
    if spec.family == Family::RegressionLinear {
        sample_regression(spec).map(Sample::Regression)
    } else {
        sample_classification(spec).map(Sample::Classification)
    }
}

/// Monte Carlo sample count used by [`bayes_error_of`] when no closed form applies.
pub const BAYES_MC_SAMPLES: usize = 200_000;

/// Bayes error of the (inlier) population: closed form for two equal-prior
/// classes with a shared covariance, Monte Carlo otherwise.
pub fn bayes_error_of(spec: &SimSpec) -> Result<f64> {
    let model = population_model(spec)?;
    if model.num_classes() == 2 && model.shared_cov().is_some() {
        bayes_error_two_class(&model, None)
    } else {
        Ok(bayes_error_monte_carlo(&model, None, BAYES_MC_SAMPLES, spec.seed.derive(stream::MONTE_CARLO, 1))?.estimate)
    }
}
