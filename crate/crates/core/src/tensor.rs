//! Tensor-train representation, dense oracle and formal arithmetic.
//!
//! A core `X_k` of shape `r_{k-1} x n_k x r_k` stores its entries column-major
//! with the left rank index fastest, then the mode index, then the right rank
//! index: entry `(a, j, g)` lives at `a + r_left * (j + n * g)`. Under this
//! layout both unfoldings are zero-copy column-major views of the same buffer:
//!
//! * vertical `V(X)`: `(r_left * n) x r_right`, row `a + r_left * j`, column `g`;
//! * horizontal `H(X)`: `r_left x (n * r_right)`, row `a`, column `j + n * g`.
//!
//! Indices passed to [`TTTensor::entry`] and [`DenseTensor::entry`] are 1-based.

use nalgebra::DMatrixView;

use crate::error::{TtError, TtResult};
use crate::linalg::{self, Mat};
use crate::random::GaussianStream;

/// Default cap on the number of entries [`TTTensor::to_dense`] may produce.
pub const DENSE_ENTRY_LIMIT: usize = 10_000_000;

/// Which matricization of a core to view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unfolding {
    Vertical,
    Horizontal,
}

/// A 3-way TT core.
#[derive(Debug, Clone, PartialEq)]
pub struct Core {
    r_left: usize,
    n: usize,
    r_right: usize,
    data: Vec<f64>,
}

impl Core {
    pub fn new(r_left: usize, n: usize, r_right: usize, data: Vec<f64>) -> TtResult<Self> {
        if r_left == 0 || n == 0 || r_right == 0 {
            return Err(TtError::InvalidCore(format!(
                "all dimensions must be positive, got ({r_left}, {n}, {r_right})"
            )));
        }
        if data.len() != r_left * n * r_right {
            return Err(TtError::InvalidCore(format!(
                "expected {} entries for shape ({r_left}, {n}, {r_right}), got {}",
                r_left * n * r_right,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(TtError::InvalidCore("non-finite entry".into()));
        }
        Ok(Self {
            r_left,
            n,
            r_right,
            data,
        })
    }

    pub fn zeros(r_left: usize, n: usize, r_right: usize) -> Self {
        Self {
            r_left,
            n,
            r_right,
            data: vec![0.0; r_left * n * r_right],
        }
    }

    /// Builds a core from its vertical unfolding, a `(r_left * n) x r_right` matrix.
    pub fn from_vertical(r_left: usize, n: usize, v: Mat) -> Self {
        assert_eq!(
            v.nrows(),
            r_left * n,
            "vertical unfolding has wrong row count"
        );
        let r_right = v.ncols();
        Self {
            r_left,
            n,
            r_right,
            data: v.data.into(),
        }
    }

    /// Builds a core from its horizontal unfolding, a `r_left x (n * r_right)` matrix.
    pub fn from_horizontal(n: usize, r_right: usize, h: Mat) -> Self {
        assert_eq!(
            h.ncols(),
            n * r_right,
            "horizontal unfolding has wrong column count"
        );
        let r_left = h.nrows();
        Self {
            r_left,
            n,
            r_right,
            data: h.data.into(),
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.r_left, self.n, self.r_right)
    }

    pub fn r_left(&self) -> usize {
        self.r_left
    }

    pub fn mode_size(&self) -> usize {
        self.n
    }

    pub fn r_right(&self) -> usize {
        self.r_right
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Entry `(a, j, g)`, 0-based.
    pub fn get(&self, a: usize, j: usize, g: usize) -> f64 {
        self.data[a + self.r_left * (j + self.n * g)]
    }

    pub fn vertical(&self) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(&self.data, self.r_left * self.n, self.r_right)
    }

    pub fn horizontal(&self) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(&self.data, self.r_left, self.n * self.r_right)
    }

    pub fn unfold(&self, direction: Unfolding) -> DMatrixView<'_, f64> {
        match direction {
            Unfolding::Vertical => self.vertical(),
            Unfolding::Horizontal => self.horizontal(),
        }
    }

    /// The `r_left x r_right` slice `X(:, j, :)`, 0-based `j`.
    pub fn slice(&self, j: usize) -> Mat {
        Mat::from_fn(self.r_left, self.r_right, |a, g| self.get(a, j, g))
    }

    /// Sum of squared entries.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `X x_1 m`: multiplies the left rank index by `m` (`H(Y) = m * H(X)`).
    pub fn left_multiply(&self, m: &Mat) -> Core {
        let h = linalg::matmul(m, &self.horizontal());
        Core::from_horizontal(self.n, self.r_right, h)
    }

    /// `X x_3 m^T`: multiplies the right rank index (`V(Y) = V(X) * m`).
    pub fn right_multiply(&self, m: &Mat) -> Core {
        let v = linalg::matmul(&self.vertical(), m);
        Core::from_vertical(self.r_left, self.n, v)
    }

    pub(crate) fn scale_in_place(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|x| *x *= alpha);
    }
}

/// A tensor in TT format with a validated rank chain.
#[derive(Debug, Clone, PartialEq)]
pub struct TTTensor {
    cores: Vec<Core>,
}

impl TTTensor {
    /// Validates the rank chain and wraps the cores.
    pub fn new(cores: Vec<Core>) -> TtResult<Self> {
        if cores.is_empty() {
            return Err(TtError::EmptyCoreList);
        }
        let left = cores[0].r_left;
        let right = cores[cores.len() - 1].r_right;
        if left != 1 || right != 1 {
            return Err(TtError::BoundaryRankNotOne { left, right });
        }
        for (k, pair) in cores.windows(2).enumerate() {
            if pair[0].r_right != pair[1].r_left {
                return Err(TtError::RankChainMismatch {
                    core: k + 1,
                    right: pair[0].r_right,
                    next: k + 2,
                    left: pair[1].r_left,
                });
            }
        }
        Ok(Self { cores })
    }

    /// Internal constructor for cores produced by the algorithms in this crate.
    pub(crate) fn from_cores(cores: Vec<Core>) -> Self {
        debug_assert!(
            Self::new(cores.clone()).is_ok(),
            "algorithm produced an invalid rank chain"
        );
        Self { cores }
    }

    /// Rank-1 tensor `v_1 o v_2 o ... o v_d`.
    pub fn rank_one(vectors: &[Vec<f64>]) -> TtResult<Self> {
        let cores = vectors
            .iter()
            .map(|v| Core::new(1, v.len(), 1, v.clone()))
            .collect::<TtResult<Vec<_>>>()?;
        Self::new(cores)
    }

    /// The zero tensor as a rank-1 TT.
    pub fn zeros(mode_sizes: &[usize]) -> TtResult<Self> {
        if mode_sizes.contains(&0) {
            return Err(TtError::InvalidCore("mode sizes must be positive".into()));
        }
        Self::new(mode_sizes.iter().map(|&n| Core::zeros(1, n, 1)).collect())
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn cores(&self) -> &[Core] {
        &self.cores
    }

    pub fn into_cores(self) -> Vec<Core> {
        self.cores
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.n).collect()
    }

    /// Full rank chain `r_0, ..., r_d`.
    pub fn ranks(&self) -> Vec<usize> {
        std::iter::once(1)
            .chain(self.cores.iter().map(|c| c.r_right))
            .collect()
    }

    /// Interior ranks `r_1, ..., r_{d-1}`.
    pub fn inner_ranks(&self) -> Vec<usize> {
        self.cores[..self.cores.len() - 1]
            .iter()
            .map(|c| c.r_right)
            .collect()
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    /// Number of stored core entries.
    pub fn num_params(&self) -> usize {
        self.cores.iter().map(|c| c.data.len()).sum()
    }

    /// Entry at a 1-based multi-index, evaluated as a product of core slices.
    pub fn entry(&self, index: &[usize]) -> TtResult<f64> {
        if index.len() != self.order() {
            return Err(TtError::IndexOutOfRange(format!(
                "index has length {}, tensor has order {}",
                index.len(),
                self.order()
            )));
        }
        for (k, (&i, core)) in index.iter().zip(&self.cores).enumerate() {
            if i == 0 || i > core.n {
                return Err(TtError::IndexOutOfRange(format!(
                    "index {i} for mode {} of size {}",
                    k + 1,
                    core.n
                )));
            }
        }
        // row vector times successive slices
        let mut row = vec![1.0];
        for (&i, core) in index.iter().zip(&self.cores) {
            let j = i - 1;
            let mut next = vec![0.0; core.r_right];
            for (g, out) in next.iter_mut().enumerate() {
                *out = row
                    .iter()
                    .enumerate()
                    .map(|(a, &x)| x * core.get(a, j, g))
                    .sum();
            }
            row = next;
        }
        Ok(row[0])
    }

    /// Dense reconstruction, refusing tensors above [`DENSE_ENTRY_LIMIT`] entries.
    pub fn to_dense(&self) -> TtResult<DenseTensor> {
        self.to_dense_with_limit(DENSE_ENTRY_LIMIT)
    }

    pub fn to_dense_with_limit(&self, limit: usize) -> TtResult<DenseTensor> {
        let entries: u128 = self.cores.iter().map(|c| c.n as u128).product();
        if entries > limit as u128 {
            return Err(TtError::DenseTooLarge { entries, limit });
        }
        // M holds V(X_{1:k}) as (n_1 ... n_k) x r_k; multiplying by H(X_{k+1})
        // and reinterpreting column-major gives V(X_{1:k+1}) for free.
        let mut m = self.cores[0].vertical().clone_owned();
        for core in &self.cores[1..] {
            let prod = &m * core.horizontal();
            let rows = m.nrows() * core.n;
            m = Mat::from_vec(rows, core.r_right, prod.data.into());
        }
        DenseTensor::new(self.mode_sizes(), m.data.into())
    }

    /// `alpha * X`, scaling the first core.
    pub fn scaled(&self, alpha: f64) -> TTTensor {
        let mut out = self.clone();
        out.cores[0].scale_in_place(alpha);
        out
    }

    /// Inner product `<X, Y>` by a left-to-right contraction.
    pub fn dot(&self, other: &TTTensor) -> TtResult<f64> {
        check_same_modes(self, other)?;
        let mut m = Mat::from_element(1, 1, 1.0);
        for (a, b) in self.cores.iter().zip(&other.cores) {
            let shifted = b.left_multiply(&m);
            m = linalg::matmul_tn(&a.vertical(), &shifted.vertical());
        }
        Ok(m[(0, 0)])
    }
}

pub(crate) fn check_same_modes(a: &TTTensor, b: &TTTensor) -> TtResult<()> {
    if a.mode_sizes() != b.mode_sizes() {
        return Err(TtError::ModeSizeMismatch(format!(
            "{:?} vs {:?}",
            a.mode_sizes(),
            b.mode_sizes()
        )));
    }
    Ok(())
}

/// Full array in generalized column-major order (first index fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    mode_sizes: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(mode_sizes: Vec<usize>, data: Vec<f64>) -> TtResult<Self> {
        let count: usize = mode_sizes.iter().product();
        if mode_sizes.is_empty() || mode_sizes.contains(&0) {
            return Err(TtError::InvalidCore(format!(
                "bad mode sizes {mode_sizes:?}"
            )));
        }
        if count != data.len() {
            return Err(TtError::InvalidCore(format!(
                "expected {count} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { mode_sizes, data })
    }

    pub fn zeros(mode_sizes: Vec<usize>) -> Self {
        let count = mode_sizes.iter().product();
        Self {
            mode_sizes,
            data: vec![0.0; count],
        }
    }

    pub fn mode_sizes(&self) -> &[usize] {
        &self.mode_sizes
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Entry at a 1-based multi-index.
    pub fn entry(&self, index: &[usize]) -> TtResult<f64> {
        if index.len() != self.mode_sizes.len() {
            return Err(TtError::IndexOutOfRange(format!(
                "index length {} for order {}",
                index.len(),
                self.mode_sizes.len()
            )));
        }
        let mut lin = 0;
        let mut stride = 1;
        for (&i, &n) in index.iter().zip(&self.mode_sizes) {
            if i == 0 || i > n {
                return Err(TtError::IndexOutOfRange(format!(
                    "index {i} for mode of size {n}"
                )));
            }
            lin += (i - 1) * stride;
            stride *= n;
        }
        Ok(self.data[lin])
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `||self - other||_F`
    pub fn distance(&self, other: &DenseTensor) -> f64 {
        assert_eq!(
            self.mode_sizes, other.mode_sizes,
            "distance: mode sizes differ"
        );
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// The first-`k`-modes unfolding `X_(1:k)` as an `(n_1...n_k) x (n_{k+1}...n_d)` matrix.
    pub fn unfold_leading(&self, k: usize) -> Mat {
        let rows: usize = self.mode_sizes[..k].iter().product();
        let cols = self.data.len() / rows;
        Mat::from_column_slice(rows, cols, &self.data)
    }
}

/// Formal (untruncated) sum of TT tensors with explicit block cores.
///
/// Ranks add up: first cores are concatenated along the right rank, last cores
/// along the left rank, and interior cores are block diagonal in every slice.
pub fn formal_sum(terms: &[TTTensor]) -> TtResult<TTTensor> {
    let first = terms.first().ok_or(TtError::EmptyTermList)?;
    for t in &terms[1..] {
        check_same_modes(first, t)?;
    }
    if terms.len() == 1 {
        return Ok(first.clone());
    }
    let d = first.order();
    let modes = first.mode_sizes();
    let mut cores = Vec::with_capacity(d);
    for (k, &n) in modes.iter().enumerate() {
        let rl: usize = if k == 0 {
            1
        } else {
            terms.iter().map(|t| t.cores[k].r_left).sum()
        };
        let rr: usize = if k == d - 1 {
            1
        } else {
            terms.iter().map(|t| t.cores[k].r_right).sum()
        };
        let mut core = Core::zeros(rl, n, rr);
        let (mut off_l, mut off_r) = (0, 0);
        for t in terms {
            let src = &t.cores[k];
            for g in 0..src.r_right {
                for j in 0..n {
                    for a in 0..src.r_left {
                        core.data[(off_l + a) + rl * (j + n * (off_r + g))] = src.get(a, j, g);
                    }
                }
            }
            if k > 0 {
                off_l += src.r_left;
            }
            if k < d - 1 {
                off_r += src.r_right;
            }
        }
        cores.push(core);
    }
    Ok(TTTensor::from_cores(cores))
}

/// `a - b` as a formal sum.
pub fn formal_difference(a: &TTTensor, b: &TTTensor) -> TtResult<TTTensor> {
    formal_sum(&[a.clone(), b.scaled(-1.0)])
}

/// Checks a full rank chain `r_0..r_d` against mode sizes.
pub(crate) fn validate_rank_chain(mode_sizes: &[usize], ranks: &[usize]) -> TtResult<()> {
    let d = mode_sizes.len();
    if d < 1 {
        return Err(TtError::InvalidRankChain("no modes".into()));
    }
    if ranks.len() != d + 1 {
        return Err(TtError::InvalidRankChain(format!(
            "expected {} ranks for {d} modes, got {}",
            d + 1,
            ranks.len()
        )));
    }
    if ranks[0] != 1 || ranks[d] != 1 {
        return Err(TtError::InvalidRankChain("boundary ranks must be 1".into()));
    }
    if ranks.contains(&0) || mode_sizes.contains(&0) {
        return Err(TtError::InvalidRankChain(
            "ranks and mode sizes must be positive".into(),
        ));
    }
    Ok(())
}

/// Random TT whose core `k` has i.i.d. `N(0, 1/(r_{k-1} n_k r_k))` entries.
///
/// `ranks` is the full chain `r_0..r_d` with `r_0 = r_d = 1`.
pub fn random_gaussian_tt(mode_sizes: &[usize], ranks: &[usize], seed: u64) -> TtResult<TTTensor> {
    validate_rank_chain(mode_sizes, ranks)?;
    let mut stream = GaussianStream::new(seed);
    Ok(random_gaussian_tt_from(&mut stream, mode_sizes, ranks))
}

pub(crate) fn random_gaussian_tt_from(
    stream: &mut GaussianStream,
    mode_sizes: &[usize],
    ranks: &[usize],
) -> TTTensor {
    let cores = mode_sizes
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let (rl, rr) = (ranks[k], ranks[k + 1]);
            let sd = 1.0 / ((rl * n * rr) as f64).sqrt();
            Core {
                r_left: rl,
                n,
                r_right: rr,
                data: stream.scaled_vec(rl * n * rr, sd),
            }
        })
        .collect();
    TTTensor::from_cores(cores)
}
