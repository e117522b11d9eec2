//! Gaussian sketches of trailing TT cores.
//!
//! For Khatri-Rao structured test matrices `Omega_d ⊙ ... ⊙ Omega_t` the
//! partial contractions satisfy `W_d = H(X_d) Omega_d` and
//! `W_k = H(X_k) [W_{k+1} ⊙ Omega_k]`. Each step is evaluated as an MTTKRP:
//! `T = V(X_k) W_{k+1}(:, block)` followed by one small `r x n` times `n`
//! product per column, so the `n r x c` Khatri-Rao matrix is never formed.

use crate::error::{TtError, TtResult};
use crate::linalg::{self, Mat};
use crate::random::GaussianStream;
use crate::tensor::{check_same_modes, TTTensor};

pub use crate::random::gaussian_matrix;

/// Columns handled per GEMM in the MTTKRP kernel.
const MTTKRP_BLOCK: usize = 32;

/// Gaussian factors `Omega_t, ..., Omega_d` sharing a column count.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFactorSet {
    start: usize,
    cols: usize,
    factors: Vec<Mat>,
}

impl GaussianFactorSet {
    /// Draws `n_k x cols` standard normal factors for modes `start..=d` (1-based).
    pub fn draw(
        stream: &mut GaussianStream,
        mode_sizes: &[usize],
        start: usize,
        cols: usize,
    ) -> Self {
        assert!(
            start >= 1 && start <= mode_sizes.len(),
            "start mode out of range"
        );
        let factors = mode_sizes[start - 1..]
            .iter()
            .map(|&n| stream.matrix(n, cols))
            .collect();
        Self {
            start,
            cols,
            factors,
        }
    }

    pub fn from_factors(start: usize, factors: Vec<Mat>) -> TtResult<Self> {
        let cols = factors.first().map_or(0, |f| f.ncols());
        if start == 0 || factors.is_empty() {
            return Err(TtError::InvalidConfig(
                "factor set needs a start mode >= 1 and at least one factor".into(),
            ));
        }
        if factors.iter().any(|f| f.ncols() != cols) {
            return Err(TtError::InvalidConfig(
                "factors must share a column count".into(),
            ));
        }
        Ok(Self {
            start,
            cols,
            factors,
        })
    }

    pub fn start_mode(&self) -> usize {
        self.start
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `Omega_k` for 1-based mode `k`.
    pub fn factor(&self, k: usize) -> &Mat {
        &self.factors[k - self.start]
    }

    pub fn factors(&self) -> &[Mat] {
        &self.factors
    }

    /// Column-wise concatenation with a factor set over the same modes.
    pub fn concat(&self, other: &GaussianFactorSet) -> TtResult<GaussianFactorSet> {
        if self.start != other.start || self.factors.len() != other.factors.len() {
            return Err(TtError::InvalidConfig(
                "factor sets cover different modes".into(),
            ));
        }
        let factors = self
            .factors
            .iter()
            .zip(&other.factors)
            .map(|(a, b)| linalg::hcat(&[a, b]))
            .collect();
        Ok(Self {
            start: self.start,
            cols: self.cols + other.cols,
            factors,
        })
    }
}

/// Partial contraction matrices `W_t, ..., W_end` (1-based modes).
///
/// For KRP sketches `W_k` is `r_{k-1} x c` and all matrices share `c`; for
/// TT-structured sketches `W_k = H(X_{k+1:d}) H(R_{k+1:d})^T` is `r_k x l_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialContractionSet {
    start: usize,
    mats: Vec<Mat>,
}

impl PartialContractionSet {
    pub fn start_mode(&self) -> usize {
        self.start
    }

    pub fn end_mode(&self) -> usize {
        self.start + self.mats.len() - 1
    }

    /// `W_k` for 1-based `k`.
    pub fn w(&self, k: usize) -> &Mat {
        assert!(
            k >= self.start && k <= self.end_mode(),
            "W_{k} not held (have {}..={})",
            self.start,
            self.end_mode()
        );
        &self.mats[k - self.start]
    }

    /// Column count of the last matrix (shared by all matrices for KRP sketches).
    pub fn cols(&self) -> usize {
        self.mats.last().map_or(0, |m| m.ncols())
    }

    pub fn mats(&self) -> &[Mat] {
        &self.mats
    }

    /// Appends the columns of `fresh` to every matrix it covers. Matrices for
    /// modes before `fresh.start_mode()` are dropped so that all remaining
    /// matrices keep a common column count.
    pub fn append(&mut self, fresh: PartialContractionSet) {
        assert!(fresh.start >= self.start && fresh.end_mode() == self.end_mode());
        let skip = fresh.start - self.start;
        self.mats.drain(..skip);
        self.start = fresh.start;
        for (w, extra) in self.mats.iter_mut().zip(&fresh.mats) {
            *w = linalg::hcat(&[w, extra]);
        }
    }
}

/// `W_k = H(X_k) [W_{k+1} ⊙ Omega_k]`, blocked MTTKRP.
fn mttkrp(core: &crate::tensor::Core, w_next: &Mat, omega: &Mat) -> Mat {
    let (rl, n, _) = core.shape();
    let c = w_next.ncols();
    let mut out = Mat::zeros(rl, c);
    let v = core.vertical();
    let mut j0 = 0;
    while j0 < c {
        let b = MTTKRP_BLOCK.min(c - j0);
        let t = linalg::matmul(&v, &w_next.columns(j0, b));
        for jj in 0..b {
            // column of T reshaped to r_{k-1} x n, applied to omega(:, j)
            let tcol = t.column(jj);
            let ocol = omega.column(j0 + jj);
            let mut dst = out.column_mut(j0 + jj);
            for i in 0..n {
                let wgt = ocol[i];
                for a in 0..rl {
                    dst[a] += tcol[a + rl * i] * wgt;
                }
            }
        }
        linalg::add_flops(2 * (rl * n * b) as u64);
        j0 += b;
    }
    out
}

/// Right-to-left partial contractions of `tt` with a KRP of Gaussian factors.
pub fn krp_partial_contractions_rl(
    tt: &TTTensor,
    factors: &GaussianFactorSet,
) -> TtResult<PartialContractionSet> {
    let d = tt.order();
    let t = factors.start_mode();
    if t < 2 || t > d {
        return Err(TtError::InvalidConfig(format!(
            "start mode must lie in 2..={d}, got {t}"
        )));
    }
    if factors.factors().len() != d - t + 1 {
        return Err(TtError::ModeSizeMismatch(format!(
            "{} factors for modes {t}..={d}",
            factors.factors().len()
        )));
    }
    let cores = tt.cores();
    for k in t..=d {
        if factors.factor(k).nrows() != cores[k - 1].mode_size() {
            return Err(TtError::ModeSizeMismatch(format!(
                "factor for mode {k} has {} rows, mode size is {}",
                factors.factor(k).nrows(),
                cores[k - 1].mode_size()
            )));
        }
    }
    let mut mats = Vec::with_capacity(d - t + 1);
    let mut w = linalg::matmul(&cores[d - 1].horizontal(), factors.factor(d));
    mats.push(w.clone());
    for k in (t..d).rev() {
        w = mttkrp(&cores[k - 1], &w, factors.factor(k));
        mats.push(w.clone());
    }
    mats.reverse();
    Ok(PartialContractionSet { start: t, mats })
}

/// Right-to-left partial contractions `W_k = H(X_{k+1:d}) H(R_{k+1:d})^T`, `k = 1..d-1`.
pub fn tt_partial_contractions_rl(tt: &TTTensor, r: &TTTensor) -> TtResult<PartialContractionSet> {
    check_same_modes(tt, r)?;
    let d = tt.order();
    let (xc, rc) = (tt.cores(), r.cores());
    let mut mats = vec![Mat::zeros(0, 0); d - 1];
    mats[d - 2] = linalg::matmul_nt(&xc[d - 1].horizontal(), &rc[d - 1].horizontal());
    for k in (1..d - 1).rev() {
        // Z_k = X_k x_3 W_k, then W_{k-1} = H(Z_k) H(R_k)^T  (1-based k+1 here)
        let z = xc[k].right_multiply(&mats[k]);
        mats[k - 1] = linalg::matmul_nt(&z.horizontal(), &rc[k].horizontal());
    }
    Ok(PartialContractionSet { start: 1, mats })
}

/// Randomized estimate `||V(X_1) W_2||_F / sqrt(width)` of `||X||`.
///
/// Its square is an unbiased estimator of `||X||^2`.
pub fn estimate_norm_krp(tt: &TTTensor, width: usize, seed: u64) -> TtResult<f64> {
    if width == 0 {
        return Err(TtError::InvalidConfig("sketch width must be >= 1".into()));
    }
    let mut stream = GaussianStream::sketch(seed);
    let factors = GaussianFactorSet::draw(&mut stream, &tt.mode_sizes(), 2, width);
    let w = krp_partial_contractions_rl(tt, &factors)?;
    Ok(sketched_norm(tt, &w))
}

/// `||V(X_1) W_2||_F / sqrt(cols(W_2))` for an existing contraction set.
pub fn sketched_norm(tt: &TTTensor, w: &PartialContractionSet) -> f64 {
    let w2 = w.w(2);
    let s = linalg::matmul(&tt.cores()[0].vertical(), w2);
    residual_norm_estimate(&s, w2.ncols())
}

/// `||S||_F / sqrt(b)`
pub fn residual_norm_estimate(s: &Mat, block: usize) -> f64 {
    assert!(block >= 1, "block size must be >= 1");
    s.norm() / (block as f64).sqrt()
}
