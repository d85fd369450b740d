//! Data-parallel execution layer.
//!
//! With the `parallel` feature (default) work is spread over the rayon pool;
//! without it the same loops run in order on the calling thread. Work is always
//! split into the same fixed-size pieces, and each piece is computed by the same
//! code path, so results do not depend on the backend or the thread count.

use nalgebra::{DMatrix, DMatrixViewMut};

/// Output columns per task in the blocked matrix products.
pub const COLUMN_BLOCK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[cfg(feature = "parallel")]
    Rayon,
}

impl Default for Exec {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Exec::Rayon
        }
        #[cfg(not(feature = "parallel"))]
        {
            Exec::Sequential
        }
    }
}

/// `(0..n).map(f).collect()`, in parallel when the backend allows.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_range_with(Exec::default(), n, f)
}

pub fn map_range_with<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Exec::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Exec::Rayon => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
    }
}

/// Apply `f(block_index, block)` to consecutive mutable chunks of `data` of
/// length `chunk`.
pub fn for_each_chunk_mut<F>(exec: Exec, data: &mut [f64], chunk: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    if chunk == 0 {
        return;
    }
    match exec {
        Exec::Sequential => data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c)),
        #[cfg(feature = "parallel")]
        Exec::Rayon => {
            use rayon::prelude::*;
            data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c))
        }
    }
}

/// `a * b`, blocked over the columns of `b`.
pub fn matmul(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    matmul_with(Exec::default(), a, b)
}

pub fn matmul_with(exec: Exec, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.ncols(), b.nrows(), "matmul: inner dimensions differ");
    let (m, n) = (a.nrows(), b.ncols());
    let mut out = DMatrix::<f64>::zeros(m, n);
    if m == 0 || n == 0 {
        return out;
    }
    for_each_chunk_mut(exec, out.as_mut_slice(), m * COLUMN_BLOCK, |blk, chunk| {
        let start = blk * COLUMN_BLOCK;
        let cols = chunk.len() / m;
        let mut view = DMatrixViewMut::from_slice(chunk, m, cols);
        view.gemm(1.0, a, &b.columns(start, cols), 0.0);
    });
    out
}

/// `aᵀ * b`, blocked over the columns of `b`.
pub fn tr_matmul(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    tr_matmul_with(Exec::default(), a, b)
}

pub fn tr_matmul_with(exec: Exec, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), b.nrows(), "tr_matmul: row counts differ");
    let (m, n) = (a.ncols(), b.ncols());
    let mut out = DMatrix::<f64>::zeros(m, n);
    if m == 0 || n == 0 {
        return out;
    }
    for_each_chunk_mut(exec, out.as_mut_slice(), m * COLUMN_BLOCK, |blk, chunk| {
        let start = blk * COLUMN_BLOCK;
        let cols = chunk.len() / m;
        let mut view = DMatrixViewMut::from_slice(chunk, m, cols);
        view.gemm_tr(1.0, a, &b.columns(start, cols), 0.0);
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(r: usize, c: usize, salt: f64) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |i, j| ((i * 31 + j * 17) as f64 * 0.37 + salt).sin())
    }

    #[test]
    fn blocked_product_matches_naive() {
        let a = test_matrix(13, 7, 0.1);
        let b = test_matrix(7, 150, 0.7);
        let got = matmul(&a, &b);
        for i in 0..13 {
            for j in 0..150 {
                let naive: f64 = (0..7).map(|k| a[(i, k)] * b[(k, j)]).sum();
                assert!((got[(i, j)] - naive).abs() < 1e-12);
            }
        }
        let c = test_matrix(7, 5, 0.2);
        let t = tr_matmul(&c, &b);
        assert!((t - c.transpose() * &b).amax() < 1e-12);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn backends_agree_bitwise() {
        let a = test_matrix(40, 30, 0.3);
        let b = test_matrix(30, 333, 0.9);
        assert_eq!(matmul_with(Exec::Sequential, &a, &b), matmul_with(Exec::Rayon, &a, &b));
        let c = test_matrix(40, 333, 0.5);
        assert_eq!(
            tr_matmul_with(Exec::Sequential, &a, &c),
            tr_matmul_with(Exec::Rayon, &a, &c)
        );
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let threaded = pool.install(|| matmul_with(Exec::Rayon, &a, &b));
        assert_eq!(threaded, matmul_with(Exec::Sequential, &a, &b));
    }
}
