//! Shared domain types: data matrices, labelled datasets, class statistics,
//! projections and Gaussian class models.
//!
//! Matrices are column-major with one sample per column (`p x n`). All second
//! moments divide by `n`, never `n - 1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense `p x n` real matrix, one sample per column, all entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix(DMatrix<f64>);

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidInput(format!(
                "data matrix must be non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(DataMatrix(values))
    }

    /// Build from row-major nested rows where each inner vector is one
    /// *feature* (row of the `p x n` matrix).
    pub fn from_feature_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::shape(format!("{p} rows of length {n}"), "ragged rows"));
        }
        Self::new(DMatrix::from_fn(p, n, |i, j| rows[i][j]))
    }

    pub fn p(&self) -> usize {
        self.0.nrows()
    }

    pub fn n(&self) -> usize {
        self.0.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Columns `idx` in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> DataMatrix {
        DataMatrix(self.0.select_columns(idx))
    }
}

/// A [`DataMatrix`] with dense class labels `0..C`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    data: DataMatrix,
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabeledDataset {
    pub fn new(data: DataMatrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if labels.len() != data.n() {
            return Err(Error::shape(
                format!("{} labels", data.n()),
                format!("{} labels", labels.len()),
            ));
        }
        if num_classes < 2 {
            return Err(Error::DegenerateLabels);
        }
        let mut seen = vec![false; num_classes];
        for &l in &labels {
            if l >= num_classes {
                return Err(Error::InvalidInput(format!(
                    "label {l} outside 0..{num_classes}"
                )));
            }
            seen[l] = true;
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::EmptyClass(c));
        }
        Ok(LabeledDataset {
            data,
            labels,
            num_classes,
        })
    }

    /// Infers `C` as `max(label) + 1`.
    pub fn from_labels(data: DataMatrix, labels: Vec<usize>) -> Result<Self> {
        let c = labels.iter().max().map_or(0, |m| m + 1);
        Self::new(data, labels, c)
    }

    pub fn data(&self) -> &DataMatrix {
        &self.data
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn p(&self) -> usize {
        self.data.p()
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    /// Sub-dataset of the given sample indices; `C` is kept, so every class must
    /// still be represented.
    pub fn subset(&self, idx: &[usize]) -> Result<LabeledDataset> {
        let labels = idx.iter().map(|&i| self.labels[i]).collect();
        LabeledDataset::new(self.data.select_columns(idx), labels, self.num_classes)
    }

    /// Sample indices belonging to class `c`.
    pub fn class_indices(&self, c: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.labels[i] == c).collect()
    }
}

/// Maximum-likelihood class statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub counts: Vec<usize>,
    pub priors: Vec<f64>,
    /// `p x C`, column `c` is the mean of class `c`.
    pub class_means: DMatrix<f64>,
    pub pooled_mean: DVector<f64>,
}

impl ClassStats {
    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn n(&self) -> usize {
        self.counts.iter().sum()
    }
}

pub fn class_stats(dataset: &LabeledDataset) -> Result<ClassStats> {
    let x = dataset.data().values();
    let (p, n) = x.shape();
    let c = dataset.num_classes();
    let mut counts = vec![0usize; c];
    let mut sums = DMatrix::<f64>::zeros(p, c);
    let mut total = DVector::<f64>::zeros(p);
    for (j, &y) in dataset.labels().iter().enumerate() {
        counts[y] += 1;
        let col = x.column(j);
        sums.column_mut(y).axpy(1.0, &col, 1.0);
        total.axpy(1.0, &col, 1.0);
    }
    if let Some(empty) = counts.iter().position(|&k| k == 0) {
        return Err(Error::EmptyClass(empty));
    }
    for (k, &cnt) in counts.iter().enumerate() {
        sums.column_mut(k).scale_mut(1.0 / cnt as f64);
    }
    let priors = counts.iter().map(|&k| k as f64 / n as f64).collect();
    Ok(ClassStats {
        counts,
        priors,
        class_means: sums,
        pooled_mean: total / n as f64,
    })
}

/// `x_i - mu_{y_i}` for every sample.
pub fn center_class_conditional(dataset: &LabeledDataset, stats: &ClassStats) -> DMatrix<f64> {
    let mut out = dataset.data().values().clone();
    for (j, &y) in dataset.labels().iter().enumerate() {
        out.column_mut(j).axpy(-1.0, &stats.class_means.column(y), 1.0);
    }
    out
}

/// `x_i - mu` for every sample.
pub fn center_pooled(dataset: &LabeledDataset, stats: &ClassStats) -> DMatrix<f64> {
    let mut out = dataset.data().values().clone();
    for mut col in out.column_iter_mut() {
        col -= &stats.pooled_mean;
    }
    out
}

/// Which algorithm produced a projection. The numeric tag is part of the
/// serialized projection format and must not change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lol,
    Pca,
    Rrlda,
    Qoq,
    Rlol,
    Lfl,
    Rp,
    Cca,
    Pls,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Lol,
        Method::Pca,
        Method::Rrlda,
        Method::Qoq,
        Method::Rlol,
        Method::Lfl,
        Method::Rp,
        Method::Cca,
        Method::Pls,
    ];

    pub fn tag(self) -> u8 {
        match self {
            Method::Lol => 1,
            Method::Pca => 2,
            Method::Rrlda => 3,
            Method::Qoq => 4,
            Method::Rlol => 5,
            Method::Lfl => 6,
            Method::Rp => 7,
            Method::Cca => 8,
            Method::Pls => 9,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.tag() == tag)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Lol => "lol",
            Method::Pca => "pca",
            Method::Rrlda => "rrlda",
            Method::Qoq => "qoq",
            Method::Rlol => "rlol",
            Method::Lfl => "lfl",
            Method::Rp => "rp",
            Method::Cca => "cca",
            Method::Pls => "pls",
        }
    }

    /// Methods that ignore the labels entirely.
    pub fn is_label_blind(self) -> bool {
        matches!(self, Method::Pca | Method::Rp)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "rr-lda" | "rr_lda" => return Ok(Method::Rrlda),
            "lrcca" => return Ok(Method::Cca),
            _ => {}
        }
        Method::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or_else(|| Error::InvalidInput(format!("unknown algorithm '{s}'")))
    }
}

/// `p x d` matrix of projection directions (one per column).
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub directions: DMatrix<f64>,
    pub method: Method,
    pub seed: Option<u64>,
}

impl Projection {
    pub fn p(&self) -> usize {
        self.directions.nrows()
    }

    pub fn d(&self) -> usize {
        self.directions.ncols()
    }

    /// The first `r` directions.
    pub fn prefix(&self, r: usize) -> Projection {
        Projection {
            directions: self.directions.columns(0, r.min(self.d())).into_owned(),
            method: self.method,
            seed: self.seed,
        }
    }
}

/// Covariance representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovMatrix {
    Diagonal { diag: Vec<f64> },
    Dense { p: usize, values: Vec<f64> },
    /// `diag(diag) + factor * factorᵀ`, with `factor` stored column-major `p x k`.
    LowRank { diag: Vec<f64>, k: usize, factor: Vec<f64> },
}

impl CovMatrix {
    pub fn diagonal(diag: DVector<f64>) -> Self {
        CovMatrix::Diagonal {
            diag: diag.as_slice().to_vec(),
        }
    }

    pub fn dense(m: DMatrix<f64>) -> Self {
        CovMatrix::Dense {
            p: m.nrows(),
            values: m.as_slice().to_vec(),
        }
    }

    pub fn low_rank(diag: DVector<f64>, factor: DMatrix<f64>) -> Self {
        CovMatrix::LowRank {
            diag: diag.as_slice().to_vec(),
            k: factor.ncols(),
            factor: factor.as_slice().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            CovMatrix::Diagonal { diag } => diag.len(),
            CovMatrix::Dense { p, .. } => *p,
            CovMatrix::LowRank { diag, .. } => diag.len(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            CovMatrix::Diagonal { diag } => DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
            CovMatrix::Dense { p, values } => DMatrix::from_column_slice(*p, *p, values),
            CovMatrix::LowRank { diag, k, factor } => {
                let p = diag.len();
                let f = DMatrix::from_column_slice(p, *k, factor);
                let mut m = &f * f.transpose();
                for (i, d) in diag.iter().enumerate() {
                    m[(i, i)] += d;
                }
                m
            }
        }
    }

    /// `Aᵀ Σ A` for a `p x d` matrix `A`, without forming `Σ` when it is structured.
    pub fn project(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            CovMatrix::Diagonal { diag } => {
                let mut scaled = a.clone();
                for (i, d) in diag.iter().enumerate() {
                    scaled.row_mut(i).scale_mut(*d);
                }
                a.transpose() * scaled
            }
            CovMatrix::Dense { .. } => {
                let s = self.to_dense();
                a.transpose() * (s * a)
            }
            CovMatrix::LowRank { diag, k, factor } => {
                let f = DMatrix::from_column_slice(diag.len(), *k, factor);
                let fa = f.transpose() * a;
                let mut scaled = a.clone();
                for (i, d) in diag.iter().enumerate() {
                    scaled.row_mut(i).scale_mut(*d);
                }
                a.transpose() * scaled + fa.transpose() * fa
            }
        }
    }

    /// `Σ v`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            CovMatrix::Diagonal { diag } => {
                DVector::from_iterator(diag.len(), diag.iter().zip(v.iter()).map(|(d, x)| d * x))
            }
            CovMatrix::Dense { .. } => self.to_dense() * v,
            CovMatrix::LowRank { diag, k, factor } => {
                let f = DMatrix::from_column_slice(diag.len(), *k, factor);
                let mut out = &f * (f.transpose() * v);
                for (i, d) in diag.iter().enumerate() {
                    out[i] += d * v[i];
                }
                out
            }
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            CovMatrix::Diagonal { diag } => diag.iter().sum(),
            CovMatrix::Dense { p, values } => (0..*p).map(|i| values[i * p + i]).sum(),
            CovMatrix::LowRank { diag, factor, .. } => {
                diag.iter().sum::<f64>() + factor.iter().map(|v| v * v).sum::<f64>()
            }
        }
    }
}

/// Square-root factor of a [`CovMatrix`], for drawing `N(0, Σ)` samples.
#[derive(Debug, Clone)]
pub enum CovFactor {
    Diagonal(DVector<f64>),
    /// Lower Cholesky factor.
    Dense(DMatrix<f64>),
    LowRank { sqrt_diag: DVector<f64>, factor: DMatrix<f64> },
}

/// Jitter added to the diagonal when a dense covariance is only semidefinite.
pub const CHOLESKY_JITTER: f64 = 1e-12;

impl CovMatrix {
    pub fn factor(&self) -> Result<CovFactor> {
        match self {
            CovMatrix::Diagonal { diag } => {
                if diag.iter().any(|&v| v < 0.0) {
                    return Err(Error::NotPositiveDefinite);
                }
                Ok(CovFactor::Diagonal(DVector::from_iterator(diag.len(), diag.iter().map(|v| v.sqrt()))))
            }
            CovMatrix::Dense { .. } => {
                let m = self.to_dense();
                if let Some(ch) = m.clone().cholesky() {
                    return Ok(CovFactor::Dense(ch.l()));
                }
                let jitter = CHOLESKY_JITTER * m.diagonal().amax().max(1.0);
                let shifted = m + DMatrix::identity(self.dim(), self.dim()) * jitter;
                shifted.cholesky().map(|c| CovFactor::Dense(c.l())).ok_or(Error::NotPositiveDefinite)
            }
            CovMatrix::LowRank { diag, k, factor } => {
                if diag.iter().any(|&v| v < 0.0) {
                    return Err(Error::NotPositiveDefinite);
                }
                Ok(CovFactor::LowRank {
                    sqrt_diag: DVector::from_iterator(diag.len(), diag.iter().map(|v| v.sqrt())),
                    factor: DMatrix::from_column_slice(diag.len(), *k, factor),
                })
            }
        }
    }
}

impl CovFactor {
    /// Number of standard normals consumed per draw.
    pub fn noise_dim(&self) -> usize {
        match self {
            CovFactor::Diagonal(s) => s.len(),
            CovFactor::Dense(l) => l.nrows(),
            CovFactor::LowRank { sqrt_diag, factor } => sqrt_diag.len() + factor.ncols(),
        }
    }

    /// Writes `mean + L z` into `out`, where `z` are iid standard normals.
    pub fn draw(&self, mean: &[f64], z: &[f64], out: &mut [f64]) {
        match self {
            CovFactor::Diagonal(s) => {
                for i in 0..s.len() {
                    out[i] = mean[i] + s[i] * z[i];
                }
            }
            CovFactor::Dense(l) => {
                let p = l.nrows();
                for i in 0..p {
                    let row: f64 = (0..=i).map(|k| l[(i, k)] * z[k]).sum();
                    out[i] = mean[i] + row;
                }
            }
            CovFactor::LowRank { sqrt_diag, factor } => {
                let p = sqrt_diag.len();
                for i in 0..p {
                    let low: f64 = (0..factor.ncols()).map(|k| factor[(i, k)] * z[p + k]).sum();
                    out[i] = mean[i] + sqrt_diag[i] * z[i] + low;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "structure", rename_all = "snake_case")]
pub enum Covariance {
    Shared { cov: CovMatrix },
    PerClass { covs: Vec<CovMatrix> },
}

/// Population parameters of a Gaussian class-conditional model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianModel {
    pub priors: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariance: Covariance,
}

impl GaussianModel {
    pub fn new(priors: Vec<f64>, means: Vec<DVector<f64>>, covariance: Covariance) -> Result<Self> {
        let c = priors.len();
        if c < 1 || means.len() != c {
            return Err(Error::shape(format!("{c} class means"), format!("{}", means.len())));
        }
        if priors.iter().any(|&p| !(p > 0.0)) || (priors.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput("priors must be positive and sum to 1".into()));
        }
        let p = means[0].len();
        if means.iter().any(|m| m.len() != p) {
            return Err(Error::shape(format!("means of length {p}"), "ragged means"));
        }
        let dims_ok = match &covariance {
            Covariance::Shared { cov } => cov.dim() == p,
            Covariance::PerClass { covs } => covs.len() == c && covs.iter().all(|s| s.dim() == p),
        };
        if !dims_ok {
            return Err(Error::shape(format!("covariances of dimension {p}"), "mismatched covariance"));
        }
        Ok(GaussianModel {
            priors,
            means: means.into_iter().map(|m| m.as_slice().to_vec()).collect(),
            covariance,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.priors.len()
    }

    pub fn p(&self) -> usize {
        self.means[0].len()
    }

    pub fn mean(&self, c: usize) -> DVector<f64> {
        DVector::from_column_slice(&self.means[c])
    }

    pub fn cov(&self, c: usize) -> &CovMatrix {
        match &self.covariance {
            Covariance::Shared { cov } => cov,
            Covariance::PerClass { covs } => &covs[c],
        }
    }

    pub fn shared_cov(&self) -> Option<&CovMatrix> {
        match &self.covariance {
            Covariance::Shared { cov } => Some(cov),
            Covariance::PerClass { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(rows: &[Vec<f64>], labels: Vec<usize>) -> LabeledDataset {
        LabeledDataset::from_labels(DataMatrix::from_feature_rows(rows).unwrap(), labels).unwrap()
    }

    fn lcg_matrix(p: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut s = seed;
        DMatrix::from_fn(p, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    #[test]
    fn two_singleton_classes() {
        let d = ds(&[vec![0.0, 2.0], vec![0.0, 0.0]], vec![0, 1]);
        let s = class_stats(&d).unwrap();
        assert_eq!(s.class_means.column(0).as_slice(), &[0.0, 0.0]);
        assert_eq!(s.class_means.column(1).as_slice(), &[2.0, 0.0]);
        assert_eq!(s.priors, vec![0.5, 0.5]);
        assert_eq!(s.pooled_mean.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn constant_data_gives_equal_means() {
        let d = ds(&[vec![3.5; 4], vec![-1.0; 4]], vec![0, 1, 0, 1]);
        let s = class_stats(&d).unwrap();
        assert_eq!(s.class_means.column(0), s.class_means.column(1));
        assert_eq!(s.class_means.column(0).as_slice(), &[3.5, -1.0]);
    }

    #[test]
    fn pooled_mean_is_prior_weighted_class_means() {
        let x = lcg_matrix(5, 20, 3);
        let labels: Vec<usize> = (0..20).map(|i| (i * 7 + 1) % 3).collect();
        let d = LabeledDataset::new(DataMatrix::new(x.clone()).unwrap(), labels.clone(), 3).unwrap();
        let s = class_stats(&d).unwrap();
        // direct summation oracle
        for r in 0..5 {
            let direct: f64 = (0..20).map(|j| x[(r, j)]).sum::<f64>() / 20.0;
            let weighted: f64 = (0..3).map(|c| s.priors[c] * s.class_means[(r, c)]).sum();
            assert!((direct - s.pooled_mean[r]).abs() <= 1e-10 * direct.abs().max(1.0));
            assert!((weighted - s.pooled_mean[r]).abs() <= 1e-10 * direct.abs().max(1.0));
        }
        assert!((s.priors.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for c in 0..3 {
            assert_eq!(s.priors[c], s.counts[c] as f64 / 20.0);
        }
    }

    #[test]
    fn class_centering() {
        let d = ds(&[vec![0.0, 2.0], vec![0.0, 0.0]], vec![0, 1]);
        let s = class_stats(&d).unwrap();
        assert!(center_class_conditional(&d, &s).iter().all(|&v| v == 0.0));

        let x3 = DataMatrix::new(DMatrix::from_row_slice(2, 3, &[1.0, 3.0, 9.0, 0.0, 0.0, 9.0])).unwrap();
        let d3 = LabeledDataset::from_labels(x3, vec![0, 0, 1]).unwrap();
        let s3 = class_stats(&d3).unwrap();
        let c = center_class_conditional(&d3, &s3);
        assert_eq!(c.column(0).as_slice(), &[-1.0, 0.0]);
        assert_eq!(c.column(1).as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn class_centered_means_vanish() {
        let x = lcg_matrix(6, 30, 11) * 100.0;
        let labels: Vec<usize> = (0..30).map(|i| i % 4).collect();
        let d = LabeledDataset::new(DataMatrix::new(x.clone()).unwrap(), labels, 4).unwrap();
        let s = class_stats(&d).unwrap();
        let centered = center_class_conditional(&d, &s);
        let again = LabeledDataset::new(DataMatrix::new(centered).unwrap(), d.labels().to_vec(), 4).unwrap();
        let s2 = class_stats(&again).unwrap();
        let xmax = x.amax();
        for c in 0..4 {
            let tol = 1e-10 * s.counts[c] as f64 * xmax;
            assert!(s2.class_means.column(c).amax() <= tol);
        }
    }

    #[test]
    fn pooled_centering() {
        let d = ds(&[vec![0.0, 2.0]], vec![0, 1]);
        let s = class_stats(&d).unwrap();
        let c = center_pooled(&d, &s);
        assert_eq!(c.as_slice(), &[-1.0, 1.0]);

        let x = lcg_matrix(4, 25, 5);
        let labels: Vec<usize> = (0..25).map(|i| i % 2).collect();
        let d = LabeledDataset::new(DataMatrix::new(x).unwrap(), labels, 2).unwrap();
        let s = class_stats(&d).unwrap();
        let c = center_pooled(&d, &s);
        for r in 0..4 {
            assert!(c.row(r).sum().abs() < 1e-12);
        }
    }

    #[test]
    fn permutation_leaves_stats_unchanged() {
        let x = lcg_matrix(3, 12, 9);
        let labels: Vec<usize> = (0..12).map(|i| (i * 5) % 3).collect();
        let d = LabeledDataset::new(DataMatrix::new(x).unwrap(), labels, 3).unwrap();
        let perm: Vec<usize> = (0..12).rev().collect();
        let dp = d.subset(&perm).unwrap();
        let (a, b) = (class_stats(&d).unwrap(), class_stats(&dp).unwrap());
        assert_eq!(a.counts, b.counts);
        assert!((a.class_means - b.class_means).amax() < 1e-14);
    }

    #[test]
    fn two_class_pooled_vs_within_scatter() {
        // pooled scatter = within scatter + (n0 n1 / n) * delta deltaᵀ, divide-by-n convention
        let x = lcg_matrix(3, 10, 21);
        let labels: Vec<usize> = (0..10).map(|i| i % 2).collect();
        let d = LabeledDataset::new(DataMatrix::new(x).unwrap(), labels, 2).unwrap();
        let s = class_stats(&d).unwrap();
        let n = 10.0;
        let pooled = center_pooled(&d, &s);
        let within = center_class_conditional(&d, &s);
        let sp = &pooled * pooled.transpose() / n;
        let sw = &within * within.transpose() / n;
        let delta = s.class_means.column(0) - s.class_means.column(1);
        let (n0, n1) = (s.counts[0] as f64, s.counts[1] as f64);
        let expected = sw + &delta * delta.transpose() * (n0 * n1 / (n * n));
        assert!((sp - expected).amax() < 1e-12);
    }

    #[test]
    fn invalid_datasets_rejected() {
        let x = DataMatrix::from_feature_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(
            LabeledDataset::new(x.clone(), vec![0, 0, 0], 2),
            Err(Error::EmptyClass(1))
        ));
        assert!(LabeledDataset::new(x.clone(), vec![0, 1], 2).is_err());
        assert!(LabeledDataset::new(x, vec![0, 0, 0], 1).is_err());
        assert!(matches!(
            DataMatrix::new(DMatrix::from_element(2, 2, f64::NAN)),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn method_tags_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::from_tag(m.tag()), Some(m));
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
    }

    #[test]
    fn structured_covariances_agree_with_dense() {
        let f = lcg_matrix(4, 2, 1);
        let diag = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let lr = CovMatrix::low_rank(diag.clone(), f.clone());
        let dense = CovMatrix::dense(lr.to_dense());
        let a = lcg_matrix(4, 2, 2);
        assert!((lr.project(&a) - dense.project(&a)).amax() < 1e-12);
        let v = DVector::from_vec(vec![0.5, -1.0, 2.0, 0.0]);
        assert!((lr.apply(&v) - dense.apply(&v)).amax() < 1e-12);
        assert!((lr.trace() - dense.trace()).abs() < 1e-12);
        let dg = CovMatrix::diagonal(diag);
        assert!((dg.project(&a) - CovMatrix::dense(dg.to_dense()).project(&a)).amax() < 1e-12);
    }
}
