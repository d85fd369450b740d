//! Cross-validated benchmarking: CSV ingestion, stratified fold plans, error
//! curves over the embedding dimension, `r*` selection and the normalized
//! comparison against LOL.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::{IndexedRandom, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::classify::{fit_predict, misclassification_rate, ClassifierKind};
use crate::embed::{embed_matrix, fit, FitOptions};
use crate::error::{Error, Result};
use crate::model::{DataMatrix, LabeledDataset, Method};
use crate::par;
use crate::rng::{stream, RngSeed};

/// Version of the `curves.csv` and `report.json` layouts.
pub const SCHEMA_VERSION: u32 = 1;

/// Features with fewer distinct values than this are one-hot encoded.
pub const CATEGORICAL_THRESHOLD: usize = 10;

/// Tokens treated as a missing cell (compared case-insensitively).
const MISSING: [&str; 6] = ["", "na", "nan", "?", "null", "none"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
    Last,
}

impl std::str::FromStr for LabelColumn {
    type Err = Error;

    /// A bare integer is a zero-based index, anything else a header name.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.trim().to_string()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    pub label: LabelColumn,
    /// `None` picks comma, tab or semicolon from the header line.
    pub delimiter: Option<u8>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            label: LabelColumn::Last,
            delimiter: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: LabeledDataset,
    /// Original label string of each class index.
    pub label_names: Vec<String>,
    /// Name of each row of the data matrix; one-hot columns read `col=value`.
    pub feature_names: Vec<String>,
    pub dropped_rows: usize,
}

fn sniff_delimiter(text: &str) -> u8 {
    let header = text.lines().next().unwrap_or("");
    [b',', b'\t', b';']
        .into_iter()
        .max_by_key(|&d| (header.bytes().filter(|&b| b == d).count(), d == b','))
        .unwrap_or(b',')
}

fn is_missing(cell: &str) -> bool {
    let lower = cell.trim().to_ascii_lowercase();
    MISSING.contains(&lower.as_str())
}

/// Orders strings numerically when they all parse, lexically otherwise.
fn sorted_levels(values: BTreeSet<String>) -> Vec<String> {
    let mut levels: Vec<String> = values.into_iter().collect();
    if levels.iter().all(|v| v.parse::<f64>().is_ok()) {
        levels.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
    }
    levels
}

pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<LoadedDataset> {
    let file = std::fs::File::open(path)?;
    parse_csv(file, options)
}

/// Reads a headed table, drops rows with any missing cell, one-hot encodes
/// low-cardinality features and maps labels to `0..C`.
pub fn parse_csv<R: Read>(mut reader: R, options: &CsvOptions) -> Result<LoadedDataset> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let delimiter = options.delimiter.unwrap_or_else(|| sniff_delimiter(&text));
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let parse_err = |line: usize, message: String| Error::ParseFailure { line, message };

    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.len() < 2 {
        return Err(parse_err(1, "need at least one feature column and a label column".into()));
    }
    let label_col = match &options.label {
        LabelColumn::Last => headers.len() - 1,
        LabelColumn::Index(i) if *i < headers.len() => *i,
        LabelColumn::Index(i) => return Err(Error::InvalidInput(format!("label column {i} out of range"))),
        LabelColumn::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidInput(format!("no column named '{name}'")))?,
    };

    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    let mut dropped = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().any(is_missing) {
            dropped += 1;
            continue;
        }
        rows.push((line, record.iter().map(str::to_string).collect()));
    }

    let label_levels = sorted_levels(rows.iter().map(|(_, r)| r[label_col].clone()).collect());
    if label_levels.len() < 2 {
        return Err(Error::DegenerateLabels);
    }
    let label_index: BTreeMap<&str, usize> = label_levels.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let labels: Vec<usize> = rows.iter().map(|(_, r)| label_index[r[label_col].as_str()]).collect();

    let mut features: Vec<Vec<f64>> = Vec::new();
    let mut feature_names = Vec::new();
    for (col, name) in headers.iter().enumerate() {
        if col == label_col {
            continue;
        }
        let levels: BTreeSet<String> = rows.iter().map(|(_, r)| r[col].clone()).collect();
        if levels.len() < CATEGORICAL_THRESHOLD {
            for level in sorted_levels(levels) {
                features.push(rows.iter().map(|(_, r)| f64::from(u8::from(r[col] == level))).collect());
                feature_names.push(format!("{name}={level}"));
            }
        } else {
            let column = rows
                .iter()
                .map(|(line, r)| {
                    r[col]
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| parse_err(*line, format!("column '{name}': '{}' is not a number", r[col])))
                })
                .collect::<Result<Vec<f64>>>()?;
            features.push(column);
            feature_names.push(name.clone());
        }
    }
    let (p, n) = (features.len(), rows.len());
    let data = DMatrix::from_fn(p, n, |i, j| features[i][j]);
    let c = label_levels.len();
    Ok(LoadedDataset {
        dataset: LabeledDataset::new(DataMatrix::new(data)?, labels, c)?,
        label_names: label_levels,
        feature_names,
        dropped_rows: dropped,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Held-out indices of each fold, sorted.
    pub folds: Vec<Vec<usize>>,
    /// Training indices actually used by each fold, sorted.
    pub train_subsamples: Vec<Vec<usize>>,
    pub subsample_size: usize,
    pub seed: RngSeed,
}

impl FoldPlan {
    pub fn n(&self) -> usize {
        self.folds.iter().map(Vec::len).sum()
    }
}

/// Splits `n` counts over classes in proportion to `weights`, by largest
/// remainder, giving every class with a positive weight at least one.
fn apportion(total: usize, weights: &[usize]) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    let nonzero = weights.iter().filter(|w| **w > 0).count();
    let total = total.max(nonzero).min(sum);
    let mut out: Vec<usize> = weights.iter().map(|&w| usize::from(w > 0)).collect();
    let rest = total - nonzero;
    let pool: usize = weights.iter().map(|w| w.saturating_sub(1)).sum();
    if pool == 0 || rest == 0 {
        return out;
    }
    let exact: Vec<f64> = weights.iter().map(|w| w.saturating_sub(1) as f64 * rest as f64 / pool as f64).collect();
    let mut given = 0;
    for (o, e) in out.iter_mut().zip(&exact) {
        *o += e.floor() as usize;
        given += e.floor() as usize;
    }
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    for &c in order.iter().cycle().take(weights.len() * 2) {
        if given == rest {
            break;
        }
        if out[c] < weights[c] {
            out[c] += 1;
            given += 1;
        }
    }
    out
}

/// Stratified `k`-fold split with a stratified training subsample of size
/// `min(⌊n(k−1)/k⌋, p−1)` per fold (raised to one sample per class present).
pub fn make_fold_plan(n: usize, p: usize, num_classes: usize, k: usize, labels: &[usize], seed: RngSeed) -> Result<FoldPlan> {
    if k > n {
        return Err(Error::TooManyFolds { k, n });
    }
    if k < 2 {
        return Err(Error::InvalidInput("need at least 2 folds".into()));
    }
    if labels.len() != n {
        return Err(Error::shape(format!("{n} labels"), format!("{}", labels.len())));
    }
    if labels.iter().any(|&l| l >= num_classes) {
        return Err(Error::InvalidInput("label outside 0..C".into()));
    }
    let mut rng = seed.derive_rng(stream::FOLDS, 0);
    let mut folds = vec![Vec::new(); k];
    // deal each shuffled class round-robin, continuing where the last class stopped
    let mut next = 0;
    for c in 0..num_classes {
        let mut idx: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());

    let subsample_size = (n * (k - 1) / k).min(p.saturating_sub(1));
    let mut in_fold = vec![0usize; n];
    for (f, idx) in folds.iter().enumerate() {
        idx.iter().for_each(|&i| in_fold[i] = f);
    }
    let train_subsamples = (0..k)
        .map(|f| {
            let mut rng = seed.derive_rng(stream::SUBSAMPLE, f as u64);
            let by_class: Vec<Vec<usize>> = (0..num_classes)
                .map(|c| (0..n).filter(|&i| in_fold[i] != f && labels[i] == c).collect())
                .collect();
            let quota = apportion(subsample_size, &by_class.iter().map(Vec::len).collect::<Vec<_>>());
            let mut chosen: Vec<usize> = by_class
                .into_iter()
                .zip(quota)
                .flat_map(|(members, q)| members.choose_multiple(&mut rng, q).copied().collect::<Vec<_>>())
                .collect();
            chosen.sort_unstable();
            chosen
        })
        .collect();
    Ok(FoldPlan {
        k,
        folds,
        train_subsamples,
        subsample_size,
        seed,
    })
}

/// `min(p − 1, 100, n_train − 1)`.
pub fn default_d_max(p: usize, plan: &FoldPlan) -> usize {
    let n_train = plan.train_subsamples.iter().map(Vec::len).min().unwrap_or(0);
    (p.saturating_sub(1)).min(100).min(n_train.saturating_sub(1)).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub classifier: ClassifierKind,
    pub fit: FitOptions,
    /// Refit the projection at every `r` instead of slicing one `d_max` fit.
    pub refit_per_r: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            classifier: ClassifierKind::Lda,
            fit: FitOptions::default(),
            refit_per_r: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub method: Method,
    /// `per_fold[i][r − 1]`; `None` where the cell failed.
    pub per_fold: Vec<Vec<Option<f64>>>,
    /// Mean over the folds that succeeded at each `r`.
    pub mean: Vec<Option<f64>>,
    /// Successful folds at each `r`.
    pub successes: Vec<usize>,
    /// Distinct failure messages, in fold order.
    pub failures: Vec<String>,
}

impl ErrorCurve {
    pub fn r_max(&self) -> usize {
        self.mean.len()
    }

    /// Values of `r` with fewer than `k/2` successful folds.
    pub fn flagged(&self) -> Vec<usize> {
        let k = self.per_fold.len();
        (1..=self.r_max()).filter(|&r| 2 * self.successes[r - 1] < k).collect()
    }

    pub fn at(&self, fold: usize, r: usize) -> Option<f64> {
        self.per_fold.get(fold)?.get(r.checked_sub(1)?).copied().flatten()
    }
}

/// Largest `r` a method can produce for `C` classes.
fn method_r_limit(method: Method, d_max: usize, num_classes: usize) -> usize {
    match method {
        Method::Cca => d_max.min(num_classes - 1),
        _ => d_max,
    }
}

struct CellResult {
    rates: Vec<Option<f64>>,
    failure: Option<String>,
}

fn run_cell(dataset: &LabeledDataset, method: Method, r_max: usize, fold: usize, plan: &FoldPlan, opts: &SweepOptions) -> CellResult {
    let fail = |e: Error| CellResult {
        rates: vec![None; r_max],
        failure: Some(e.to_string()),
    };
    let train = match dataset.subset(&plan.train_subsamples[fold]) {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    let test_idx = &plan.folds[fold];
    let test_x = dataset.data().values().select_columns(test_idx);
    let test_y: Vec<usize> = test_idx.iter().map(|&i| dataset.labels()[i]).collect();
    let fit_opts = FitOptions {
        seed: opts.fit.seed.derive(stream::FOLDS, 1 + fold as u64),
        ..opts.fit
    };
    let c = dataset.num_classes();
    let score = |proj: &crate::model::Projection| -> Result<f64> {
        let tr = embed_matrix(proj, train.data().values())?;
        let te = embed_matrix(proj, &test_x)?;
        let pred = fit_predict(opts.classifier, &tr, train.labels(), c, &te)?;
        misclassification_rate(&pred, &test_y)
    };

    let mut failure = None;
    let mut rates = Vec::with_capacity(r_max);
    if opts.refit_per_r {
        for r in 1..=r_max {
            // Below the method's minimum dimension, score the leading `r`
            // columns of the smallest valid fit, as the sliced sweep does.
            let proj = match fit(method, &train, r, &fit_opts) {
                Err(Error::TooFewDims { min, .. }) => fit(method, &train, min, &fit_opts).map(|p| p.prefix(r)),
                other => other,
            };
            match proj.and_then(|p| score(&p)) {
                Ok(v) => rates.push(Some(v)),
                Err(e) => {
                    failure.get_or_insert(e.to_string());
                    rates.push(None);
                }
            }
        }
        return CellResult { rates, failure };
    }
    let full = match fit(method, &train, r_max, &fit_opts) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let tr_all = embed_matrix(&full, train.data().values());
    let te_all = embed_matrix(&full, &test_x);
    let (tr_all, te_all) = match (tr_all, te_all) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail(e),
    };
    for r in 1..=r_max.min(full.d()) {
        let tr = tr_all.rows(0, r).into_owned();
        let te = te_all.rows(0, r).into_owned();
        match fit_predict(opts.classifier, &tr, train.labels(), c, &te).and_then(|pred| misclassification_rate(&pred, &test_y)) {
            Ok(v) => rates.push(Some(v)),
            Err(e) => {
                failure.get_or_insert(e.to_string());
                rates.push(None);
            }
        }
    }
    rates.resize(r_max, None);
    CellResult { rates, failure }
}

/// Error curves for every method, `r = 1..=d_max` (CCA stops at `C − 1`).
/// Cells that fail are recorded as missing and do not abort the sweep.
pub fn sweep(dataset: &LabeledDataset, methods: &[Method], d_max: usize, plan: &FoldPlan, opts: &SweepOptions) -> Result<Vec<ErrorCurve>> {
    if d_max == 0 || d_max > dataset.p().saturating_sub(1).max(1) {
        return Err(Error::InvalidInput(format!("d_max = {d_max} must lie in 1..=p-1 (p = {})", dataset.p())));
    }
    if plan.n() != dataset.n() {
        return Err(Error::shape(format!("plan over {} samples", dataset.n()), format!("{}", plan.n())));
    }
    let k = plan.k;
    let limits: Vec<usize> = methods.iter().map(|&m| method_r_limit(m, d_max, dataset.num_classes())).collect();
    let cells = par::map_range(methods.len() * k, |t| {
        let (a, fold) = (t / k, t % k);
        run_cell(dataset, methods[a], limits[a], fold, plan, opts)
    });
    let mut cells = cells.into_iter();
    let curves = methods
        .iter()
        .zip(&limits)
        .map(|(&method, &r_max)| {
            let mine: Vec<CellResult> = cells.by_ref().take(k).collect();
            let mut failures: Vec<String> = Vec::new();
            for f in mine.iter().filter_map(|c| c.failure.clone()) {
                if !failures.contains(&f) {
                    failures.push(f);
                }
            }
            let per_fold: Vec<Vec<Option<f64>>> = mine.into_iter().map(|c| c.rates).collect();
            let mut mean = Vec::with_capacity(r_max);
            let mut successes = Vec::with_capacity(r_max);
            for r in 0..r_max {
                let ok: Vec<f64> = per_fold.iter().filter_map(|f| f[r]).collect();
                successes.push(ok.len());
                mean.push((!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64));
            }
            ErrorCurve {
                method,
                per_fold,
                mean,
                successes,
                failures,
            }
        })
        .collect();
    Ok(curves)
}

/// `r̂ = argmin L̄(r)` (smallest on ties) and `r* = min{r : L̄(r) < 1.05 L̄(r̂)}`,
/// both 1-based. Missing entries are skipped. When `L̄(r̂) = 0` no `r`
/// satisfies the strict inequality and `r̂` is returned.
pub fn select_rstar(mean: &[Option<f64>]) -> Result<(usize, usize)> {
    let finite = || mean.iter().enumerate().filter_map(|(i, v)| v.filter(|x| x.is_finite()).map(|x| (i + 1, x)));
    let (r_hat, best) = finite()
        .fold(None, |acc: Option<(usize, f64)>, (r, v)| match acc {
            Some((_, b)) if v >= b => acc,
            _ => Some((r, v)),
        })
        .ok_or(Error::EmptyCurve)?;
    let threshold = 1.05 * best;
    let r_star = finite().find(|&(_, v)| v < threshold).map_or(r_hat, |(r, _)| r);
    Ok((r_hat, r_star))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmReport {
    pub method: Method,
    pub r_hat: usize,
    pub r_star: usize,
    pub mean_error_at_r_star: f64,
    /// `(r*_LOL − r*_a) / p`.
    pub normalized_dimension: f64,
    /// Over folds of `(L_a,i(r*_LOL) − L_a,i(r*_a)) / chance_i`, the formula as written.
    pub normalized_error_mean: Option<f64>,
    pub normalized_error_median: Option<f64>,
    /// Over folds of `(L_LOL,i(r*_LOL) − L_a,i(r*_a)) / chance_i`, a paired
    /// LOL-versus-`a` reading; positive when `a` beats LOL.
    pub paired_error_mean: Option<f64>,
    pub paired_error_median: Option<f64>,
    pub flagged_r: Vec<usize>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub n: usize,
    pub p: usize,
    pub num_classes: usize,
    pub k: usize,
    pub seed: RngSeed,
    /// Error of predicting the most frequent training class, per fold.
    pub chance: Vec<f64>,
    pub algorithms: Vec<AlgorithmReport>,
}

/// Error of always predicting the most frequent class of each fold's training
/// subsample (ties to the lowest class).
pub fn chance_rates(dataset: &LabeledDataset, plan: &FoldPlan) -> Vec<f64> {
    let labels = dataset.labels();
    (0..plan.k)
        .map(|f| {
            let mut counts = vec![0usize; dataset.num_classes()];
            plan.train_subsamples[f].iter().for_each(|&i| counts[labels[i]] += 1);
            let top = (0..counts.len()).fold(0, |best, c| if counts[c] > counts[best] { c } else { best });
            let test = &plan.folds[f];
            test.iter().filter(|&&i| labels[i] != top).count() as f64 / test.len() as f64
        })
        .collect()
}

fn mean_median(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    let median = if m % 2 == 1 { s[m / 2] } else { 0.5 * (s[m / 2 - 1] + s[m / 2]) };
    (Some(mean), Some(median))
}

/// Per-algorithm `r*` and the normalized comparison against the LOL curve.
/// `r*_LOL` is clamped to a curve's range when that curve is shorter (CCA).
pub fn normalized_report(dataset: &LabeledDataset, curves: &[ErrorCurve], plan: &FoldPlan) -> Result<BenchmarkReport> {
    let lol = curves.iter().find(|c| c.method == Method::Lol).ok_or(Error::NoBaseline)?;
    let (_, r_lol) = select_rstar(&lol.mean)?;
    let chance = chance_rates(dataset, plan);
    let algorithms = curves
        .iter()
        .map(|curve| {
            let (r_hat, r_star) = select_rstar(&curve.mean)?;
            let r_lol_a = r_lol.min(curve.r_max());
            let mut displayed = Vec::new();
            let mut paired = Vec::new();
            for (i, &ch) in chance.iter().enumerate() {
                if ch <= 0.0 {
                    continue;
                }
                if let (Some(at_lol), Some(at_own)) = (curve.at(i, r_lol_a), curve.at(i, r_star)) {
                    displayed.push((at_lol - at_own) / ch);
                }
                if let (Some(lol_own), Some(at_own)) = (lol.at(i, r_lol), curve.at(i, r_star)) {
                    paired.push((lol_own - at_own) / ch);
                }
            }
            let (normalized_error_mean, normalized_error_median) = mean_median(&displayed);
            let (paired_error_mean, paired_error_median) = mean_median(&paired);
            Ok(AlgorithmReport {
                method: curve.method,
                r_hat,
                r_star,
                mean_error_at_r_star: curve.mean[r_star - 1].unwrap_or(f64::NAN),
                normalized_dimension: (r_lol as f64 - r_star as f64) / dataset.p() as f64,
                normalized_error_mean,
                normalized_error_median,
                paired_error_mean,
                paired_error_median,
                flagged_r: curve.flagged(),
                failures: curve.failures.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchmarkReport {
        schema_version: SCHEMA_VERSION,
        n: dataset.n(),
        p: dataset.p(),
        num_classes: dataset.num_classes(),
        k: plan.k,
        seed: plan.seed,
        chance,
        algorithms,
    })
}

/// `schema_version,algorithm,r,fold,error` rows; `fold` is `mean` for the
/// fold average and `error` is empty for a failed cell.
pub fn write_curves_csv<W: Write>(curves: &[ErrorCurve], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    out.write_record(["schema_version", "algorithm", "r", "fold", "error"]).map_err(io)?;
    let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.17e}"));
    let version = SCHEMA_VERSION.to_string();
    for curve in curves {
        for r in 1..=curve.r_max() {
            for (i, fold) in curve.per_fold.iter().enumerate() {
                out.write_record([&version, curve.method.name(), &r.to_string(), &i.to_string(), &fmt(fold[r - 1])])
                    .map_err(io)?;
            }
            out.write_record([&version, curve.method.name(), &r.to_string(), "mean", &fmt(curve.mean[r - 1])])
                .map_err(io)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn report_json(report: &BenchmarkReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub methods: Vec<Method>,
    pub k: usize,
    /// `None` uses [`default_d_max`].
    pub d_max: Option<usize>,
    pub seed: RngSeed,
    pub sweep: SweepOptions,
}

/// Fold plan, sweep and report in one call.
pub fn run_benchmark(dataset: &LabeledDataset, config: &BenchmarkConfig) -> Result<(Vec<ErrorCurve>, BenchmarkReport)> {
    let plan = make_fold_plan(dataset.n(), dataset.p(), dataset.num_classes(), config.k, dataset.labels(), config.seed)?;
    let d_max = config.d_max.unwrap_or_else(|| default_d_max(dataset.p(), &plan));
    let mut sweep_opts = config.sweep;
    sweep_opts.fit.seed = config.seed;
    let curves = sweep(dataset, &config.methods, d_max, &plan, &sweep_opts)?;
    let report = normalized_report(dataset, &curves, &plan)?;
    Ok((curves, report))
}
