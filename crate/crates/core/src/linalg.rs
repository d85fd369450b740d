//! Numerical primitives: truncated SVD, orthonormalization, sparse random
//! matrices, Haar rotations and the implicit CCA eigensolve.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ClassStats;
use crate::par;
use crate::rng::{stream, RngSeed};

/// Above this `min(p, n)`, [`SvdMode::Auto`] switches to the randomized solver.
pub const AUTO_EXACT_LIMIT: usize = 2000;

/// Relative cutoff below which singular values count as zero.
pub const PINV_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SvdMode {
    Exact,
    Randomized { oversample: usize, power_iters: usize },
    #[default]
    Auto,
}

impl SvdMode {
    pub const fn randomized() -> Self {
        SvdMode::Randomized {
            oversample: 10,
            power_iters: 2,
        }
    }

    fn resolve(self, p: usize, n: usize) -> SvdMode {
        match self {
            SvdMode::Auto if p.min(n) <= AUTO_EXACT_LIMIT => SvdMode::Exact,
            SvdMode::Auto => SvdMode::randomized(),
            other => other,
        }
    }
}

/// Top-`k` singular triplets, sorted by decreasing singular value.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

/// Top-`k` SVD of a `p x n` matrix.
///
/// Each left singular vector is flipped so its largest-magnitude entry (first
/// one on ties) is positive; `v` follows. Exact results for different `k` are
/// prefixes of one another.
pub fn truncated_svd(m: &DMatrix<f64>, k: usize, mode: SvdMode, seed: RngSeed) -> Result<SvdResult> {
    let (p, n) = m.shape();
    let max = p.min(n);
    if k == 0 || k > max {
        return Err(Error::RankRequestTooLarge { requested: k, max });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut out = match mode.resolve(p, n) {
        SvdMode::Exact | SvdMode::Auto => exact_svd(m, k),
        SvdMode::Randomized {
            oversample,
            power_iters,
        } => randomized_svd(m, k, oversample, power_iters, seed),
    };
    fix_signs(&mut out.u, Some(&mut out.v));
    Ok(out)
}

fn exact_svd(m: &DMatrix<f64>, k: usize) -> SvdResult {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V");
    let order = descending_order(svd.singular_values.as_slice());
    let order = &order[..k];
    SvdResult {
        u: u.select_columns(order),
        s: DVector::from_iterator(k, order.iter().map(|&i| svd.singular_values[i])),
        v: vt.select_rows(order).transpose(),
    }
}

fn randomized_svd(m: &DMatrix<f64>, k: usize, oversample: usize, power_iters: usize, seed: RngSeed) -> SvdResult {
    let (p, n) = m.shape();
    let l = (k + oversample).min(p.min(n));
    let mut rng = seed.derive_rng(stream::SVD_SKETCH, 0);
    let omega = DMatrix::<f64>::from_fn(n, l, |_, _| rng.sample(StandardNormal));
    let mut q = thin_q(par::matmul(m, &omega));
    for _ in 0..power_iters {
        let z = thin_q(par::tr_matmul(m, &q));
        q = thin_q(par::matmul(m, &z));
    }
    let b = par::tr_matmul(&q, m);
    let small = exact_svd(&b, k);
    SvdResult {
        u: par::matmul(&q, &small.u),
        s: small.s,
        v: small.v,
    }
}

fn thin_q(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}

/// Indices sorting `values` in decreasing order, stable on ties.
pub(crate) fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

/// Flip columns of `u` so each has a positive largest-magnitude entry.
pub(crate) fn fix_signs(u: &mut DMatrix<f64>, mut v: Option<&mut DMatrix<f64>>) {
    for j in 0..u.ncols() {
        let col = u.column(j);
        let mut best = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if col.len() > 0 && col[best] < 0.0 {
            u.column_mut(j).neg_mut();
            if let Some(v) = v.as_deref_mut() {
                v.column_mut(j).neg_mut();
            }
        }
    }
}

/// Modified Gram-Schmidt with one reorthogonalization pass. Columns whose
/// residual falls below `1e-10` of their original norm are dropped.
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut kept: Vec<DVector<f64>> = Vec::with_capacity(m.ncols());
    for col in m.column_iter() {
        let norm0 = col.norm();
        if norm0 == 0.0 {
            continue;
        }
        let mut r = col.into_owned();
        for _ in 0..2 {
            for q in &kept {
                let proj = q.dot(&r);
                r.axpy(-proj, q, 1.0);
            }
        }
        let norm = r.norm();
        if norm >= 1e-10 * norm0 {
            kept.push(r / norm);
        }
    }
    if kept.is_empty() {
        return DMatrix::zeros(m.nrows(), 0);
    }
    DMatrix::from_columns(&kept)
}

/// Very sparse random matrix: entries `±√s` with probability `1/(2s)` each,
/// `s = √p`, then scaled by `1/√k`. Column `j` comes from its own stream, so
/// the first columns do not depend on `k` beyond the scale factor.
pub fn sparse_random_matrix(p: usize, k: usize, seed: RngSeed) -> DMatrix<f64> {
    let scale = 1.0 / (k as f64).sqrt();
    let mut out = DMatrix::zeros(p, k);
    for j in 0..k {
        let mut rng = seed.derive_rng(stream::SPARSE_DIRECTIONS, j as u64);
        fill_sparse_column(p, &mut rng, out.column_mut(j).as_mut_slice());
        out.column_mut(j).scale_mut(scale);
    }
    out
}

fn fill_sparse_column(p: usize, rng: &mut crate::rng::Rng, col: &mut [f64]) {
    let s = (p as f64).sqrt();
    let root_s = s.sqrt();
    let half = 1.0 / (2.0 * s);
    for v in col.iter_mut() {
        let u: f64 = rng.random();
        *v = if u < half {
            root_s
        } else if u < 2.0 * half {
            -root_s
        } else {
            0.0
        };
    }
}

/// Unit-norm sparse random directions. A column that comes out all-zero is
/// redrawn from the continuation of its own stream.
pub fn sparse_unit_directions(p: usize, k: usize, seed: RngSeed) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(p, k);
    for j in 0..k {
        let mut rng = seed.derive_rng(stream::SPARSE_DIRECTIONS, j as u64);
        let mut col = out.column_mut(j);
        loop {
            fill_sparse_column(p, &mut rng, col.as_mut_slice());
            let norm = col.norm();
            if norm > 0.0 {
                col.scale_mut(1.0 / norm);
                break;
            }
        }
    }
    out
}

/// Haar-distributed rotation (`det = +1`).
pub fn random_rotation(p: usize, seed: RngSeed) -> DMatrix<f64> {
    let mut rng = seed.derive_rng(stream::ROTATION, 0);
    let g = DMatrix::<f64>::from_fn(p, p, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if p > 0 && q.clone().lu().determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// Top-`d` eigenvectors of `S_X† S_B` without forming any `p x p` matrix.
///
/// `centered` is the pooled-centered data. With `X̃ = U Σ Vᵀ` and
/// `M = [√π_c (μ_c − μ)]`, the nonzero eigenpairs come from the `C x C`
/// matrix `Wᵀ W`, `W = Σ⁻¹ Uᵀ M`, and map back as `v ∝ U Σ⁻¹ W y`.
pub fn implicit_cca_eigs(centered: &DMatrix<f64>, stats: &ClassStats, d: usize) -> Result<DMatrix<f64>> {
    let c = stats.num_classes();
    if d > c - 1 {
        return Err(Error::CcaRankExceeded {
            requested: d,
            max: c - 1,
        });
    }
    let p = centered.nrows();
    if d == 0 {
        return Ok(DMatrix::zeros(p, 0));
    }
    let svd = centered.clone().svd(true, false);
    let s = &svd.singular_values;
    let s1 = s.max();
    if !(s1 > 0.0) {
        return Err(Error::DegeneratePooledCovariance);
    }
    let keep: Vec<usize> = descending_order(s.as_slice())
        .into_iter()
        .filter(|&i| s[i] > PINV_RTOL * s1)
        .collect();
    let u = svd.u.expect("requested U").select_columns(&keep);
    let inv_s = DVector::from_iterator(keep.len(), keep.iter().map(|&i| 1.0 / s[i]));

    let mut m = DMatrix::zeros(p, c);
    for k in 0..c {
        let w = stats.priors[k].sqrt();
        m.set_column(k, &((stats.class_means.column(k) - &stats.pooled_mean) * w));
    }
    let mut w = par::tr_matmul(&u, &m);
    for (i, f) in inv_s.iter().enumerate() {
        w.row_mut(i).scale_mut(*f);
    }
    let eig = SymmetricEigen::new(w.transpose() * &w);
    let order = descending_order(eig.eigenvalues.as_slice());
    let lam_max = eig.eigenvalues.max().max(0.0);

    let mut out = DMatrix::zeros(p, d);
    for (j, &idx) in order.iter().take(d).enumerate() {
        if eig.eigenvalues[idx] <= 1e-12 * lam_max || lam_max == 0.0 {
            return Err(Error::InvalidInput(format!(
                "between-class scatter has rank below the {d} requested CCA directions"
            )));
        }
        let mut z = &w * eig.eigenvectors.column(idx);
        z.component_mul_assign(&inv_s);
        let v = &u * z;
        out.set_column(j, &(&v / v.norm()));
    }
    fix_signs(&mut out, None);
    Ok(out)
}
