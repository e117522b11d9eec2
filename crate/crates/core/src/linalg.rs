//! Dense kernels used by every sweep, with a per-thread flop counter.
//!
//! Counts follow the usual leading-order conventions: `2mkn` for a GEMM,
//! `4mn^2 - 4n^3/3` for a Householder QR that also forms the thin Q factor,
//! and `4mn^2 + 8n^3` (with `n = min(rows, cols)`) for a thin SVD. Counters are
//! thread-local so concurrent tests do not pollute each other.

use std::cell::Cell;

use nalgebra::{DMatrix, Dyn, Matrix, Storage};

use crate::error::{TtError, TtResult};

pub type Mat = DMatrix<f64>;

thread_local! {
    static FLOPS: Cell<u64> = const { Cell::new(0) };
}

/// Adds `n` to the calling thread's flop counter.
pub fn add_flops(n: u64) {
    FLOPS.with(|c| c.set(c.get().wrapping_add(n)));
}

/// Current value of the calling thread's flop counter.
pub fn flop_count() -> u64 {
    FLOPS.with(|c| c.get())
}

/// Runs `f` and returns its result together with the flops it recorded.
pub fn count_flops<T>(f: impl FnOnce() -> T) -> (T, u64) {
    let before = flop_count();
    let out = f();
    (out, flop_count().wrapping_sub(before))
}

fn gemm_flops(m: usize, k: usize, n: usize) -> u64 {
    2 * (m as u64) * (k as u64) * (n as u64)
}

/// `a * b`
pub fn matmul<S1, S2>(a: &Matrix<f64, Dyn, Dyn, S1>, b: &Matrix<f64, Dyn, Dyn, S2>) -> Mat
where
    S1: Storage<f64, Dyn, Dyn>,
    S2: Storage<f64, Dyn, Dyn>,
{
    assert_eq!(a.ncols(), b.nrows(), "matmul: inner dimensions differ");
    add_flops(gemm_flops(a.nrows(), a.ncols(), b.ncols()));
    a * b
}

/// `a^T * b`
pub fn matmul_tn<S1, S2>(a: &Matrix<f64, Dyn, Dyn, S1>, b: &Matrix<f64, Dyn, Dyn, S2>) -> Mat
where
    S1: Storage<f64, Dyn, Dyn>,
    S2: Storage<f64, Dyn, Dyn>,
{
    assert_eq!(a.nrows(), b.nrows(), "matmul_tn: inner dimensions differ");
    add_flops(gemm_flops(a.ncols(), a.nrows(), b.ncols()));
    a.tr_mul(b)
}

/// `a * b^T`
pub fn matmul_nt<S1, S2>(a: &Matrix<f64, Dyn, Dyn, S1>, b: &Matrix<f64, Dyn, Dyn, S2>) -> Mat
where
    S1: Storage<f64, Dyn, Dyn>,
    S2: Storage<f64, Dyn, Dyn>,
{
    assert_eq!(a.ncols(), b.ncols(), "matmul_nt: inner dimensions differ");
    add_flops(gemm_flops(a.nrows(), a.ncols(), b.nrows()));
    a * b.transpose()
}

fn qr_flops(rows: usize, cols: usize) -> u64 {
    let (m, n) = (rows as f64, cols.min(rows) as f64);
    let k = cols as f64;
    // factorization of an m x k panel plus accumulation of the thin Q
    (2.0 * m * k * n - 2.0 * n * n * n / 3.0 + 2.0 * m * n * n - 2.0 * n * n * n / 3.0).max(0.0)
        as u64
}

/// Reduced Householder QR: `a = q * r` with `q` of size `m x min(m, n)`.
///
/// No sign normalization is applied.
pub fn thin_qr<S>(a: &Matrix<f64, Dyn, Dyn, S>) -> (Mat, Mat)
where
    S: Storage<f64, Dyn, Dyn>,
{
    add_flops(qr_flops(a.nrows(), a.ncols()));
    if a.nrows() == 0 || a.ncols() == 0 {
        let p = a.nrows().min(a.ncols());
        return (Mat::zeros(a.nrows(), p), Mat::zeros(p, a.ncols()));
    }
    let qr = a.clone_owned().qr();
    (qr.q(), qr.r())
}

/// Orthonormal basis of the column space of `a` (the Q factor of a thin QR).
pub fn orth_basis<S>(a: &Matrix<f64, Dyn, Dyn, S>) -> Mat
where
    S: Storage<f64, Dyn, Dyn>,
{
    thin_qr(a).0
}

/// Thin SVD factors with singular values sorted in decreasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Mat,
    pub singular_values: Vec<f64>,
    pub vt: Mat,
}

/// Thin SVD `a = u * diag(s) * vt`.
pub fn svd<S>(a: &Matrix<f64, Dyn, Dyn, S>) -> TtResult<Svd>
where
    S: Storage<f64, Dyn, Dyn>,
{
    let (m, n) = (a.nrows(), a.ncols());
    let p = m.min(n);
    let (lo, hi) = (p as u64, m.max(n) as u64);
    add_flops(4 * hi * lo * lo + 8 * lo * lo * lo);
    if p == 0 {
        return Ok(Svd {
            u: Mat::zeros(m, 0),
            singular_values: Vec::new(),
            vt: Mat::zeros(0, n),
        });
    }
    let fail = TtError::SvdFailure { rows: m, cols: n };
    if a.iter().any(|x| !x.is_finite()) {
        return Err(fail);
    }
    // nalgebra's Golub-Kahan SVD can return wrong singular values for
    // nearly diagonal triangular inputs, which are exactly the R factors
    // rounding produces, so the decomposition is delegated to faer.
    let fa = faer::Mat::<f64>::from_fn(m, n, |i, j| a[(i, j)]);
    let dec = fa.thin_svd().map_err(|_| fail.clone())?;
    let (fu, fv, fs) = (dec.U(), dec.V(), dec.S().column_vector());
    let u = Mat::from_fn(m, p, |i, j| fu[(i, j)]);
    let vt = Mat::from_fn(p, n, |i, j| fv[(j, i)]);
    let singular_values: Vec<f64> = (0..p).map(|i| fs[i]).collect();
    if singular_values.iter().any(|x| !x.is_finite()) {
        return Err(fail);
    }
    Ok(Svd {
        u,
        singular_values,
        vt,
    })
}

/// `||a - q (q^T a)||_F`, evaluated by explicit subtraction so that tiny
/// residuals do not cancel.
pub fn projection_residual<S1, S2>(
    q: &Matrix<f64, Dyn, Dyn, S1>,
    a: &Matrix<f64, Dyn, Dyn, S2>,
) -> f64
where
    S1: Storage<f64, Dyn, Dyn>,
    S2: Storage<f64, Dyn, Dyn>,
{
    if q.ncols() == 0 {
        return a.norm();
    }
    let coeff = matmul_tn(q, a);
    let proj = matmul(q, &coeff);
    (a.clone_owned() - proj).norm()
}

/// Subtracts the projection onto span(q) in place: `s <- s - q (q^T s)`.
pub fn project_out<S>(q: &Matrix<f64, Dyn, Dyn, S>, s: &mut Mat)
where
    S: Storage<f64, Dyn, Dyn>,
{
    if q.ncols() == 0 || s.ncols() == 0 {
        return;
    }
    let coeff = matmul_tn(q, &*s);
    let proj = matmul(q, &coeff);
    *s -= proj;
}

/// Horizontal concatenation `[a_1 a_2 ...]`.
pub fn hcat(blocks: &[&Mat]) -> Mat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut off = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hcat: row counts differ");
        out.columns_mut(off, b.ncols()).copy_from(*b);
        off += b.ncols();
    }
    out
}

/// Vertical concatenation `[a_1; a_2; ...]`.
pub fn vcat(blocks: &[&Mat]) -> Mat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut off = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vcat: column counts differ");
        out.rows_mut(off, b.nrows()).copy_from(*b);
        off += b.nrows();
    }
    out
}

/// `||a^T a - I||_F`
pub fn orthonormality_defect<S>(a: &Matrix<f64, Dyn, Dyn, S>) -> f64
where
    S: Storage<f64, Dyn, Dyn>,
{
    let g = a.tr_mul(a);
    (g - Mat::identity(a.ncols(), a.ncols())).norm()
}
