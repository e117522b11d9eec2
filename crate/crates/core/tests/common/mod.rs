//! Brute-force dense oracles shared by the integration tests.
//!
//! Everything here is written directly from the definitions (sums over
//! indices, products of core slices) and deliberately avoids the library's
//! own contraction kernels.

#![allow(dead_code)]

use nalgebra::DMatrix;
use ttkrp::{DenseTensor, TTTensor};

/// Calls `f` on every multi-index of `sizes`, first index fastest.
pub fn for_each_index(sizes: &[usize], mut f: impl FnMut(&[usize])) {
    let total: usize = sizes.iter().product();
    let mut idx = vec![0usize; sizes.len()];
    for _ in 0..total {
        f(&idx);
        for (i, s) in idx.iter_mut().zip(sizes) {
            *i += 1;
            if *i < *s {
                break;
            }
            *i = 0;
        }
    }
}

/// Row vector `X_1(i_1) X_2(i_2) ... X_k(i_k)` of length `r_k` for modes `start..start+idx.len()` (0-based),
/// starting from the `a`-th row of the left boundary.
fn slice_product(tt: &TTTensor, start: usize, a: usize, idx: &[usize]) -> Vec<f64> {
    let cores = tt.cores();
    let rl = cores[start].r_left();
    let mut v = vec![0.0; rl];
    v[a] = 1.0;
    for (off, &i) in idx.iter().enumerate() {
        let c = &cores[start + off];
        let (r0, _, r1) = c.shape();
        let mut next = vec![0.0; r1];
        for (g, nv) in next.iter_mut().enumerate() {
            *nv = (0..r0).map(|b| v[b] * c.get(b, i, g)).sum();
        }
        v = next;
    }
    v
}

/// Entry of a TT tensor by multiplying the core slices one by one.
pub fn entry(tt: &TTTensor, idx: &[usize]) -> f64 {
    slice_product(tt, 0, 0, idx)[0]
}

/// Full tensor, first index fastest.
pub fn dense(tt: &TTTensor) -> DenseTensor {
    let sizes = tt.mode_sizes();
    let mut data = Vec::with_capacity(sizes.iter().product());
    for_each_index(&sizes, |idx| data.push(entry(tt, idx)));
    DenseTensor::new(sizes, data).unwrap()
}

/// `H(X_{k:d})` for 1-based `k`: an `r_{k-1} x (n_k ... n_d)` matrix, columns ordered first index fastest.
pub fn trailing_unfolding(tt: &TTTensor, k: usize) -> DMatrix<f64> {
    let sizes = tt.mode_sizes()[k - 1..].to_vec();
    let rl = tt.cores()[k - 1].r_left();
    let cols: usize = sizes.iter().product();
    let mut m = DMatrix::zeros(rl, cols);
    let mut col = 0;
    for_each_index(&sizes, |idx| {
        for a in 0..rl {
            m[(a, col)] = slice_product(tt, k - 1, a, idx)[0];
        }
        col += 1;
    });
    m
}

/// Explicit Khatri-Rao product `Omega_d ⊙ ... ⊙ Omega_k`, rows ordered with `i_k` fastest.
pub fn krp_matrix(factors: &[DMatrix<f64>]) -> DMatrix<f64> {
    let sizes: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
    let cols = factors[0].ncols();
    let rows: usize = sizes.iter().product();
    let mut m = DMatrix::zeros(rows, cols);
    let mut row = 0;
    for_each_index(&sizes, |idx| {
        for j in 0..cols {
            m[(row, j)] = idx.iter().zip(factors).map(|(&i, f)| f[(i, j)]).product();
        }
        row += 1;
    });
    m
}

/// `||a - b||_F / ||b||_F`
pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Dense relative error `||X - Y|| / ||X||`.
pub fn dense_rel_error(x: &TTTensor, y: &TTTensor) -> f64 {
    let (dx, dy) = (dense(x), dense(y));
    dx.distance(&dy) / dx.norm()
}
