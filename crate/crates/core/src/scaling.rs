//! Wall-clock scaling of projection fits in `p`, `n` or the thread count.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::embed::{fit, FitOptions};
use crate::error::{Error, Result};
use crate::linalg::SvdMode;
use crate::model::Method;
use crate::rng::RngSeed;
use crate::sim::{sample_classification, Family, LabelScheme, SimSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleAxis {
    P(Vec<usize>),
    N(Vec<usize>),
    Threads(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleConfig {
    pub axis: ScaleAxis,
    /// Values held fixed while the axis varies.
    pub p: usize,
    pub n: usize,
    pub threads: usize,
    pub d: usize,
    pub method: Method,
    pub svd_mode: SvdMode,
    /// Each point reports the fastest of this many fits.
    pub repeats: usize,
    pub seed: RngSeed,
}

impl ScaleConfig {
    pub fn new(axis: ScaleAxis) -> Self {
        ScaleConfig {
            axis,
            p: 10_000,
            n: 2000,
            threads: 0,
            d: 10,
            method: Method::Lol,
            svd_mode: SvdMode::randomized(),
            repeats: 3,
            seed: RngSeed(0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub p: usize,
    pub n: usize,
    /// 0 means the default pool.
    pub threads: usize,
    pub d: usize,
    pub seconds: f64,
    /// Time relative to the previous row.
    pub ratio: Option<f64>,
}

/// Parses `start:end:xF` (geometric), `start:end:+S` (arithmetic) or a comma
/// list such as `1000,2000,5000`.
pub fn parse_sweep(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidInput(format!("cannot parse sweep '{text}'"));
    let parts: Vec<&str> = text.trim().split(':').collect();
    if parts.len() == 1 {
        return text.split(',').map(|v| v.trim().parse::<usize>().map_err(|_| bad())).collect();
    }
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: usize = parts[0].parse().map_err(|_| bad())?;
    let end: usize = parts[1].parse().map_err(|_| bad())?;
    if start == 0 || end < start {
        return Err(bad());
    }
    let mut out = Vec::new();
    let mut v = start;
    if let Some(f) = parts[2].strip_prefix('x') {
        let f: usize = f.parse().map_err(|_| bad())?;
        if f < 2 {
            return Err(bad());
        }
        while v <= end {
            out.push(v);
            v *= f;
        }
    } else if let Some(s) = parts[2].strip_prefix('+') {
        let s: usize = s.parse().map_err(|_| bad())?;
        if s == 0 {
            return Err(bad());
        }
        while v <= end {
            out.push(v);
            v += s;
        }
    } else {
        return Err(bad());
    }
    Ok(out)
}

fn time_fit(p: usize, n: usize, cfg: &ScaleConfig) -> Result<f64> {
    let mut spec = SimSpec::new(Family::Spherical, p, n, cfg.seed);
    spec.labels = LabelScheme::Balanced;
    let ds = sample_classification(&spec)?.dataset;
    let opts = FitOptions {
        svd_mode: cfg.svd_mode,
        seed: cfg.seed,
        orthonormalize: false,
    };
    let mut best = f64::INFINITY;
    for _ in 0..cfg.repeats.max(1) {
        let start = Instant::now();
        let proj = fit(cfg.method, &ds, cfg.d, &opts)?;
        best = best.min(start.elapsed().as_secs_f64());
        drop(proj);
    }
    Ok(best)
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads > 1 {
        return Err(Error::InvalidInput("built without the `parallel` feature".into()));
    }
    Ok(f())
}

/// Times one fit per axis value (fastest of `repeats`). Data generation is
/// not timed.
pub fn scale_sweep(cfg: &ScaleConfig) -> Result<Vec<ScaleRow>> {
    let points: Vec<(usize, usize, usize)> = match &cfg.axis {
        ScaleAxis::P(ps) => ps.iter().map(|&p| (p, cfg.n, cfg.threads)).collect(),
        ScaleAxis::N(ns) => ns.iter().map(|&n| (cfg.p, n, cfg.threads)).collect(),
        ScaleAxis::Threads(ts) => ts.iter().map(|&t| (cfg.p, cfg.n, t)).collect(),
    };
    if points.is_empty() {
        return Err(Error::InvalidInput("empty sweep".into()));
    }
    let mut rows: Vec<ScaleRow> = Vec::with_capacity(points.len());
    for (p, n, threads) in points {
        let seconds = with_threads(threads, || time_fit(p, n, cfg))??;
        let ratio = rows.last().map(|r| seconds / r.seconds);
        rows.push(ScaleRow {
            p,
            n,
            threads,
            d: cfg.d,
            seconds,
            ratio,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_syntax() {
        assert_eq!(parse_sweep("10000:80000:x2").unwrap(), vec![10000, 20000, 40000, 80000]);
        assert_eq!(parse_sweep("1:10:+4").unwrap(), vec![1, 5, 9]);
        assert_eq!(parse_sweep("3, 5,8").unwrap(), vec![3, 5, 8]);
        for bad in ["", "5:1:x2", "1:4:x1", "1:4:*2", "a:b:x2", "1:2"] {
            assert!(parse_sweep(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn tiny_sweep_runs() {
        let mut cfg = ScaleConfig::new(ScaleAxis::P(vec![50, 100]));
        cfg.n = 40;
        cfg.d = 3;
        cfg.repeats = 1;
        let rows = scale_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].ratio.is_none() && rows[1].ratio.is_some());
        assert!(rows.iter().all(|r| r.seconds >= 0.0));
    }
}
