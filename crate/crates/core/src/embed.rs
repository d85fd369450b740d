//! Projection fitting for the LOL family and its comparators, and the
//! application of a projection to data.
//!
//! Every fit returns a `p x d` [`Projection`]. For all methods the `d`-column
//! fit is the column prefix of any larger fit on the same data and seed, so a
//! sweep over `d` can fit once and slice.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, SvdMode};
use crate::model::{class_stats, center_class_conditional, center_pooled, ClassStats, DataMatrix, LabeledDataset, Method, Projection};
use crate::par;
use crate::rng::RngSeed;

/// Scale turning a median absolute deviation into a normal-consistent spread.
pub const MAD_SCALE: f64 = 1.4826;
/// Winsorizing threshold, in scaled MADs.
pub const WINSOR_MADS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub svd_mode: SvdMode,
    pub seed: RngSeed,
    /// Gram-Schmidt the fitted columns. Off by default; may drop columns.
    pub orthonormalize: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            svd_mode: SvdMode::Auto,
            seed: RngSeed(0),
            orthonormalize: false,
        }
    }
}

impl FitOptions {
    pub fn with_seed(seed: impl Into<RngSeed>) -> Self {
        FitOptions {
            seed: seed.into(),
            ..Default::default()
        }
    }
}

/// Unit-norm differences between the most frequent class location and every
/// other class location.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanDifferenceMatrix {
    /// `p x (C-1)`.
    pub deltas: DMatrix<f64>,
    /// Classes by decreasing prior, ties by ascending index.
    pub order: Vec<usize>,
}

/// Classes sorted by decreasing prior; equal priors keep ascending index.
pub fn class_order(priors: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..priors.len()).collect();
    idx.sort_by(|&a, &b| priors[b].total_cmp(&priors[a]).then(a.cmp(&b)));
    idx
}

pub fn mean_difference_matrix(stats: &ClassStats) -> Result<MeanDifferenceMatrix> {
    deltas_from_locations(&stats.class_means, &stats.priors)
}

fn deltas_from_locations(locations: &DMatrix<f64>, priors: &[f64]) -> Result<MeanDifferenceMatrix> {
    let c = priors.len();
    if c < 2 {
        return Err(Error::DegenerateLabels);
    }
    let order = class_order(priors);
    let first = locations.column(order[0]);
    let floor = 1e-12 * first.norm().max(1.0);
    let mut deltas = DMatrix::zeros(locations.nrows(), c - 1);
    for (j, &other) in order[1..].iter().enumerate() {
        let diff = first - locations.column(other);
        let norm = diff.norm();
        if norm < floor {
            return Err(Error::DegenerateMeans {
                first: order[0],
                second: other,
            });
        }
        deltas.set_column(j, &(diff / norm));
    }
    Ok(MeanDifferenceMatrix { deltas, order })
}

fn check_d(d: usize, min: usize) -> Result<usize> {
    if d < min {
        return Err(Error::TooFewDims { d, min });
    }
    Ok(d - min)
}

fn finish(directions: DMatrix<f64>, method: Method, opts: &FitOptions, seeded: bool) -> Projection {
    let directions = if opts.orthonormalize {
        linalg::orthonormalize(&directions)
    } else {
        directions
    };
    Projection {
        directions,
        method,
        seed: seeded.then_some(opts.seed.0),
    }
}

fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

fn top_left_vectors(m: &DMatrix<f64>, k: usize, opts: &FitOptions) -> Result<DMatrix<f64>> {
    if k == 0 {
        return Ok(DMatrix::zeros(m.nrows(), 0));
    }
    Ok(linalg::truncated_svd(m, k, opts.svd_mode, opts.seed)?.u)
}

/// `[δ̃ | top d-(C-1) left singular vectors of the class-centered data]`.
pub fn fit_lol(dataset: &LabeledDataset, d: usize, opts: &FitOptions) -> Result<Projection> {
    let extra = check_d(d, dataset.num_classes() - 1)?;
    let stats = class_stats(dataset)?;
    let delta = mean_difference_matrix(&stats)?;
    let u = top_left_vectors(&center_class_conditional(dataset, &stats), extra, opts)?;
    Ok(finish(hstack(&delta.deltas, &u), Method::Lol, opts, false))
}

/// Top-`d` left singular vectors of the pooled-centered data.
pub fn fit_pca(dataset: &LabeledDataset, d: usize, opts: &FitOptions) -> Result<Projection> {
    let stats = class_stats(dataset)?;
    let u = linalg::truncated_svd(&center_pooled(dataset, &stats), d, opts.svd_mode, opts.seed)?.u;
    Ok(finish(u, Method::Pca, opts, false))
}

/// Top-`d` left singular vectors of the class-centered data.
pub fn fit_rrlda(dataset: &LabeledDataset, d: usize, opts: &FitOptions) -> Result<Projection> {
    let stats = class_stats(dataset)?;
    let u = linalg::truncated_svd(&center_class_conditional(dataset, &stats), d, opts.svd_mode, opts.seed)?.u;
    Ok(finish(u, Method::Rrlda, opts, false))
}

/// δ̃ followed by per-class singular vectors merged by decreasing singular value.
pub fn fit_qoq(dataset: &LabeledDataset, d: usize, opts: &FitOptions) -> Result<Projection> {
    let extra = check_d(d, dataset.num_classes() - 1)?;
    let stats = class_stats(dataset)?;
    let delta = mean_difference_matrix(&stats)?;
    let p = dataset.p();
    let x = dataset.data().values();

    // (singular value, class, rank, vector)
    let mut pool: Vec<(f64, usize, usize, DVector<f64>)> = Vec::new();
    if extra > 0 {
        for c in 0..dataset.num_classes() {
            let idx = dataset.class_indices(c);
            let mut xc = x.select_columns(&idx);
            let mu = stats.class_means.column(c);
            for mut col in xc.column_iter_mut() {
                col -= &mu;
            }
            let k = extra.min(p).min(idx.len());
            let svd = linalg::truncated_svd(&xc, k, opts.svd_mode, opts.seed)?;
            for r in 0..k {
                pool.push((svd.s[r], c, r, svd.u.column(r).into_owned()));
            }
        }
        if pool.len() < extra {
            return Err(Error::RankRequestTooLarge {
                requested: extra,
                max: pool.len(),
            });
        }
        pool.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    }
    let mut out = DMatrix::zeros(p, d);
    out.columns_mut(0, delta.deltas.ncols()).copy_from(&delta.deltas);
    for (j, item) in pool.iter().take(extra).enumerate() {
        out.set_column(delta.deltas.ncols() + j, &item.3);
    }
    Ok(finish(out, Method::Qoq, opts, false))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Coordinate-wise class medians, `p x C`.
pub fn class_medians(dataset: &LabeledDataset) -> DMatrix<f64> {
    let x = dataset.data().values();
    let mut out = DMatrix::zeros(dataset.p(), dataset.num_classes());
    for c in 0..dataset.num_classes() {
        let idx = dataset.class_indices(c);
        let mut buf = vec![0.0; idx.len()];
        for i in 0..dataset.p() {
            for (b, &j) in buf.iter_mut().zip(&idx) {
                *b = x[(i, j)];
            }
            out[(i, c)] = median(&mut buf);
        }
    }
    out
}

/// Residuals from class medians, each coordinate clipped to its median
/// ± 3 scaled MADs. Coordinates with zero MAD are left alone.
pub fn winsorized_residuals(dataset: &LabeledDataset, medians: &DMatrix<f64>) -> DMatrix<f64> {
    let mut r = dataset.data().values().clone();
    for (j, &y) in dataset.labels().iter().enumerate() {
        r.column_mut(j).axpy(-1.0, &medians.column(y), 1.0);
    }
    let n = r.ncols();
    let mut buf = vec![0.0; n];
    for i in 0..r.nrows() {
        for (b, v) in buf.iter_mut().zip(r.row(i).iter()) {
            *b = *v;
        }
        let med = median(&mut buf);
        for (b, v) in buf.iter_mut().zip(r.row(i).iter()) {
            *b = (v - med).abs();
        }
        let mad = MAD_SCALE * median(&mut buf);
        if mad > 0.0 {
            let (lo, hi) = (med - WINSOR_MADS * mad, med + WINSOR_MADS * mad);
            for v in r.row_mut(i).iter_mut() {
                *v = v.clamp(lo, hi);
            }
        }
    }
    r
}

/// Robust LOL: class medians for location and winsorized residuals for the
/// second-moment directions.
pub fn fit_rlol(dataset: &LabeledDataset, d: usize, opts: &FitOptions) -> Result<Projection> {
    let extra = check_d(d, dataset.num_classes() - 1)?;
    let stats = class_stats(dataset)?;
    let medians = class_medians(dataset);
    let delta = deltas_from_locations(&medians, &stats.priors)?;
    let u = top_left_vectors(&winsorized_residuals(dataset, &medians), extra, opts)?;
    Ok(finish(hstack(&delta.deltas, &u), Method::Rlol, opts, false))
}

/// δ̃ followed by unit-norm very sparse random directions.
pub fn fit_lfl(dataset: &LabeledDataset, d: usize, opts: &FitOptions) -> Result<Projection> {
    let extra = check_d(d, dataset.num_classes() - 1)?;
    let stats = class_stats(dataset)?;
    let delta = mean_difference_matrix(&stats)?;
    let r = linalg::sparse_unit_directions(dataset.p(), extra, opts.seed);
    Ok(finish(hstack(&delta.deltas, &r), Method::Lfl, opts, true))
}

/// Label-blind unit-norm very sparse random directions.
pub fn fit_rp(p: usize, d: usize, opts: &FitOptions) -> Projection {
    finish(linalg::sparse_unit_directions(p, d, opts.seed), Method::Rp, opts, true)
}

/// Low-rank CCA against the class indicators, at most `C-1` directions.
pub fn fit_lrcca(dataset: &LabeledDataset, d: usize, opts: &FitOptions) -> Result<Projection> {
    let stats = class_stats(dataset)?;
    let v = linalg::implicit_cca_eigs(&center_pooled(dataset, &stats), &stats, d)?;
    Ok(finish(v, Method::Cca, opts, false))
}

pub const PLS_TOL: f64 = 1e-10;
pub const PLS_MAX_ITER: usize = 500;

/// NIPALS PLS2 weight vectors against the centered one-hot label matrix.
/// X is deflated after each component.
pub fn fit_pls(dataset: &LabeledDataset, d: usize, opts: &FitOptions) -> Result<Projection> {
    let (p, n) = (dataset.p(), dataset.n());
    let max = p.min(n.saturating_sub(1));
    if d == 0 || d > max {
        return Err(Error::RankRequestTooLarge { requested: d, max });
    }
    let stats = class_stats(dataset)?;
    let mut x = center_pooled(dataset, &stats);
    let c = dataset.num_classes();
    // n x C centered indicators
    let mut y = DMatrix::<f64>::zeros(n, c);
    for (i, &l) in dataset.labels().iter().enumerate() {
        y[(i, l)] = 1.0;
    }
    for k in 0..c {
        let m = y.column(k).mean();
        y.column_mut(k).add_scalar_mut(-m);
    }
    let start = (0..c)
        .max_by(|&a: &usize, &b: &usize| y.column(a).norm_squared().total_cmp(&y.column(b).norm_squared()).then(b.cmp(&a)))
        .unwrap_or(0);

    let mut w_out = DMatrix::zeros(p, d);
    for comp in 0..d {
        let mut u = y.column(start).into_owned();
        let mut t_old: Option<DVector<f64>> = None;
        let mut converged = false;
        let mut w = DVector::zeros(p);
        let mut t = DVector::zeros(n);
        for _ in 0..PLS_MAX_ITER {
            w = &x * &u;
            let wn = w.norm();
            if !(wn > 0.0) {
                return Err(Error::PlsNoConvergence { component: comp });
            }
            w /= wn;
            t = x.tr_mul(&w);
            let tt = t.norm_squared();
            if !(tt > 0.0) {
                return Err(Error::PlsNoConvergence { component: comp });
            }
            let q = y.tr_mul(&t) / tt;
            let qq = q.norm_squared();
            if !(qq > 0.0) {
                return Err(Error::PlsNoConvergence { component: comp });
            }
            u = &y * &q / qq;
            if let Some(prev) = &t_old {
                if (&t - prev).norm() <= PLS_TOL * t.norm() {
                    converged = true;
                    break;
                }
            }
            t_old = Some(t.clone());
        }
        if !converged {
            return Err(Error::PlsNoConvergence { component: comp });
        }
        w_out.set_column(comp, &w);
        let loading = &x * &t / t.norm_squared();
        x.ger(-1.0, &loading, &t, 1.0);
    }
    linalg::fix_signs(&mut w_out, None);
    Ok(finish(w_out, Method::Pls, opts, false))
}

/// Fit any method by tag.
pub fn fit(method: Method, dataset: &LabeledDataset, d: usize, opts: &FitOptions) -> Result<Projection> {
    match method {
        Method::Lol => fit_lol(dataset, d, opts),
        Method::Pca => fit_pca(dataset, d, opts),
        Method::Rrlda => fit_rrlda(dataset, d, opts),
        Method::Qoq => fit_qoq(dataset, d, opts),
        Method::Rlol => fit_rlol(dataset, d, opts),
        Method::Lfl => fit_lfl(dataset, d, opts),
        Method::Rp => Ok(fit_rp(dataset.p(), d, opts)),
        Method::Cca => fit_lrcca(dataset, d, opts),
        Method::Pls => fit_pls(dataset, d, opts),
    }
}

/// `directionsᵀ M`, a `d x n` matrix.
pub fn embed(proj: &Projection, m: &DataMatrix) -> Result<DataMatrix> {
    embed_matrix(proj, m.values()).and_then(DataMatrix::new)
}

pub fn embed_matrix(proj: &Projection, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if proj.p() != m.nrows() {
        return Err(Error::shape(format!("{} rows", proj.p()), format!("{} rows", m.nrows())));
    }
    Ok(par::tr_matmul(&proj.directions, m))
}

const MAGIC: &[u8; 8] = b"LOLPROJ\0";
const FORMAT_VERSION: u32 = 1;

/// Binary layout, little endian: magic `LOLPROJ\0`, `u32` version, `u64` p,
/// `u64` d, `u8` method tag, `u8` seed flag, `u64` seed, then `p*d` `f64`
/// values in column-major order.
pub fn write_projection_binary<W: Write>(proj: &Projection, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(proj.p() as u64).to_le_bytes())?;
    w.write_all(&(proj.d() as u64).to_le_bytes())?;
    w.write_all(&[proj.method.tag(), proj.seed.is_some() as u8])?;
    w.write_all(&proj.seed.unwrap_or(0).to_le_bytes())?;
    for v in proj.directions.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_projection_binary<R: Read>(mut r: R) -> Result<Projection> {
    let bad = |m: &str| Error::InvalidInput(format!("projection file: {m}"));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != FORMAT_VERSION {
        return Err(bad("unsupported version"));
    }
    r.read_exact(&mut b8)?;
    let p = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let d = u64::from_le_bytes(b8) as usize;
    let mut flags = [0u8; 2];
    r.read_exact(&mut flags)?;
    let method = Method::from_tag(flags[0]).ok_or_else(|| bad("unknown method tag"))?;
    r.read_exact(&mut b8)?;
    let seed = (flags[1] != 0).then(|| u64::from_le_bytes(b8));
    let len = p.checked_mul(d).ok_or_else(|| bad("size overflow"))?;
    let mut values = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut b8)?;
        values.push(f64::from_le_bytes(b8));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(Projection {
        directions: DMatrix::from_vec(p, d, values),
        method,
        seed,
    })
}

/// CSV layout: a `p,d,method,seed` header and its values, then one row per
/// feature with `d` comma-separated entries.
pub fn write_projection_csv<W: Write>(proj: &Projection, w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().flexible(true).from_writer(w);
    let io = |e: csv::Error| Error::Io(e.into());
    wr.write_record(["p", "d", "method", "seed"]).map_err(io)?;
    let seed = proj.seed.map(|s| s.to_string()).unwrap_or_default();
    wr.write_record([proj.p().to_string(), proj.d().to_string(), proj.method.name().to_string(), seed])
        .map_err(io)?;
    for row in proj.directions.row_iter() {
        wr.write_record(row.iter().map(|v| format!("{v:?}"))).map_err(io)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_projection_csv<R: Read>(r: R) -> Result<Projection> {
    let mut rd = csv::ReaderBuilder::new().flexible(true).has_headers(true).from_reader(r);
    let parse_err = |line: usize, m: String| Error::ParseFailure { line, message: m };
    let mut records = rd.records();
    let head = records
        .next()
        .ok_or_else(|| parse_err(2, "missing header values".into()))?
        .map_err(|e| parse_err(2, e.to_string()))?;
    let field = |i: usize| head.get(i).unwrap_or("").trim().to_string();
    let p: usize = field(0).parse().map_err(|_| parse_err(2, "bad p".into()))?;
    let d: usize = field(1).parse().map_err(|_| parse_err(2, "bad d".into()))?;
    let method: Method = field(2).parse()?;
    let seed = match field(3).as_str() {
        "" => None,
        s => Some(s.parse().map_err(|_| parse_err(2, "bad seed".into()))?),
    };
    let mut m = DMatrix::<f64>::zeros(p, d);
    for i in 0..p {
        let line = i + 3;
        let rec = records
            .next()
            .ok_or_else(|| parse_err(line, "missing row".into()))?
            .map_err(|e| parse_err(line, e.to_string()))?;
        if rec.len() != d {
            return Err(parse_err(line, format!("expected {d} values, got {}", rec.len())));
        }
        for (j, v) in rec.iter().enumerate() {
            m[(i, j)] = v.trim().parse().map_err(|_| parse_err(line, format!("bad value '{v}'")))?;
        }
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(Projection {
        directions: m,
        method,
        seed,
    })
}
