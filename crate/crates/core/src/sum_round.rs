//! Adaptive rounding of a sum of TT tensors without forming the formal sum.
//!
//! All terms are sketched with one shared set of Khatri-Rao factors, so the
//! sketch of the sum is the sum of the per-term sketches. Mode by mode, the
//! current first core is the horizontal concatenation of the projected term
//! cores and is multiplied by the vertically stacked partial contractions.

use crate::error::{TtError, TtResult};
use crate::linalg::{self, Mat};
use crate::random::GaussianStream;
use crate::round_rand::{block_size, grow_basis, AdaptiveRounding};
use crate::sketch::{self, GaussianFactorSet, PartialContractionSet};
use crate::tensor::{check_same_modes, formal_sum, Core, TTTensor};

/// A non-empty list of TT tensors with equal mode sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct TTSum {
    terms: Vec<TTTensor>,
}

impl TTSum {
    pub fn new(terms: Vec<TTTensor>) -> TtResult<Self> {
        let first = terms.first().ok_or(TtError::EmptyTermList)?;
        for t in &terms[1..] {
            check_same_modes(first, t)?;
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[TTTensor] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<TTTensor> {
        self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn order(&self) -> usize {
        self.terms[0].order()
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        self.terms[0].mode_sizes()
    }

    /// Largest rank over all terms and modes.
    pub fn max_rank(&self) -> usize {
        self.terms.iter().map(|t| t.max_rank()).max().unwrap_or(1)
    }

    pub fn push(&mut self, term: TTTensor) -> TtResult<()> {
        check_same_modes(&self.terms[0], &term)?;
        self.terms.push(term);
        Ok(())
    }

    /// The explicit block-structured TT of the sum.
    pub fn formal_sum(&self) -> TTTensor {
        formal_sum(&self.terms).expect("terms validated at construction")
    }
}

/// Per-term partial contractions against one shared factor set.
pub fn sum_partial_contractions(
    sum: &TTSum,
    factors: &GaussianFactorSet,
) -> TtResult<Vec<PartialContractionSet>> {
    sum.terms()
        .iter()
        .map(|t| sketch::krp_partial_contractions_rl(t, factors))
        .collect()
}

/// `W_{k+1}^{(i)}(:, cols)` stacked vertically over the terms.
fn stacked_columns(ws: &[PartialContractionSet], k: usize, start: usize, b: usize) -> Mat {
    let blocks: Vec<Mat> = ws
        .iter()
        .map(|w| w.w(k + 1).columns(start, b).clone_owned())
        .collect();
    let refs: Vec<&Mat> = blocks.iter().collect();
    linalg::vcat(&refs)
}

/// Residual sketch for the sum at mode `k` (1-based, `k < d`).
///
/// `z` is the current first core's vertical unfolding, whose columns are the
/// concatenated right ranks of the terms. Fresh factors are drawn once and
/// contracted with every term. Returns `(I - Q Q^T) z [W_{k+1}^{(1)}; ...; W_{k+1}^{(s)}]`
/// restricted to columns `cols(Q) .. cols(Q) + b`.
pub fn residual_sketch_sum(
    sum: &TTSum,
    z: &Mat,
    q: &Mat,
    ws: &mut [PartialContractionSet],
    stream: &mut GaussianStream,
    k: usize,
    b: usize,
) -> TtResult<Mat> {
    if ws.len() != sum.len() {
        return Err(TtError::ModeSizeMismatch(format!(
            "{} contraction sets for {} terms",
            ws.len(),
            sum.len()
        )));
    }
    let used = q.ncols();
    let have = ws[0].cols();
    if have < used + b {
        let factors = GaussianFactorSet::draw(stream, &sum.mode_sizes(), k + 1, used + b - have);
        for (w, term) in ws.iter_mut().zip(sum.terms()) {
            w.append(sketch::krp_partial_contractions_rl(term, &factors)?);
        }
    }
    let stacked = stacked_columns(ws, k, used, b);
    if stacked.nrows() != z.ncols() {
        return Err(TtError::ModeSizeMismatch(format!(
            "basis matrix has {} columns, stacked contractions have {} rows",
            z.ncols(),
            stacked.nrows()
        )));
    }
    let mut s = linalg::matmul(z, &stacked);
    linalg::project_out(q, &mut s);
    Ok(s)
}

/// Relative threshold below which the estimated norm of the sum is treated as zero.
const ZERO_GUARD: f64 = 1e3 * f64::EPSILON;

/// Adaptive KRP rounding of `sum` to relative accuracy `tolerance`.
///
/// The initial sketch width is the largest term rank; the first block at mode
/// `k` is `min(max_i r_k^{(i)}, rbar_k)` and later blocks are `ceil(f_inc rbar_k)`.
/// The norm of the sum is always the sketch estimate. If that estimate is
/// negligible relative to the terms, a rank-one zero tensor is returned.
pub fn round_sum_adaptive_krp(
    sum: &TTSum,
    tolerance: f64,
    f_inc: f64,
    seed: u64,
) -> TtResult<AdaptiveRounding> {
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(TtError::InvalidConfig(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    if !(f_inc > 0.0 && f_inc < 1.0) {
        return Err(TtError::InvalidConfig(format!(
            "f_inc must lie in (0, 1), got {f_inc}"
        )));
    }
    let d = sum.order();
    let terms = sum.terms();
    let mut stream = GaussianStream::sketch(seed);
    let width = sum.max_rank();
    let factors = GaussianFactorSet::draw(&mut stream, &sum.mode_sizes(), 2, width);
    let mut ws = sum_partial_contractions(sum, &factors)?;

    let first: Vec<Mat> = terms
        .iter()
        .map(|t| t.cores()[0].vertical().clone_owned())
        .collect();
    let z1 = linalg::hcat(&first.iter().collect::<Vec<_>>());
    let norm = sketch::residual_norm_estimate(
        &linalg::matmul(&z1, &stacked_columns(&ws, 1, 0, width)),
        width,
    );
    let largest_term = first
        .iter()
        .zip(&ws)
        .map(|(v, w)| sketch::residual_norm_estimate(&linalg::matmul(v, w.w(2)), width))
        .fold(0.0, f64::max);
    if norm <= ZERO_GUARD * largest_term {
        return Ok(AdaptiveRounding {
            tensor: TTTensor::zeros(&sum.mode_sizes())?,
            tau: 0.0,
            norm,
            modes: Vec::new(),
        });
    }
    let tau = tolerance * norm / ((d - 1) as f64).sqrt();

    let mut cores: Vec<Core> = Vec::with_capacity(d);
    let n1 = sum.mode_sizes()[0];
    let mut current = Core::from_vertical(1, n1, z1);
    let mut modes = Vec::with_capacity(d - 1);
    for k in 0..d - 1 {
        let z = current.vertical().clone_owned();
        let (rl, n, _) = current.shape();
        let rbar = z.nrows().min(z.ncols());
        let term_rank = terms.iter().map(|t| t.ranks()[k + 1]).max().unwrap_or(1);
        let b_init = term_rank.clamp(1, rbar);
        let b_inc = block_size(rbar, f_inc);
        let empty = Mat::zeros(z.nrows(), 0);
        let s = residual_sketch_sum(sum, &z, &empty, &mut ws, &mut stream, k + 1, b_init)?;
        let (q, trace) = grow_basis(&s, rbar, b_inc, tau, |q, b| {
            residual_sketch_sum(sum, &z, q, &mut ws, &mut stream, k + 1, b)
        })?;
        modes.push(trace);
        let m = linalg::matmul_tn(&q, &z);
        cores.push(Core::from_vertical(rl, n, q));
        current = next_core(terms, k + 1, &m, k + 1 == d - 1);
    }
    cores.push(current);
    Ok(AdaptiveRounding {
        tensor: TTTensor::from_cores(cores),
        tau,
        norm,
        modes,
    })
}

/// Applies the column blocks `M^{(i)}` of `m` to core `k` (0-based) of each
/// term; interior cores are concatenated along the right rank, the last core
/// is summed.
fn next_core(terms: &[TTTensor], k: usize, m: &Mat, last: bool) -> Core {
    let mut offset = 0;
    let mut parts: Vec<Core> = Vec::with_capacity(terms.len());
    for t in terms {
        let c = &t.cores()[k];
        let block = m.columns(offset, c.r_left()).clone_owned();
        offset += c.r_left();
        parts.push(c.left_multiply(&block));
    }
    let (rl, n, _) = parts[0].shape();
    if last {
        let mut acc = parts[0].vertical().clone_owned();
        for p in &parts[1..] {
            acc += p.vertical();
        }
        Core::from_vertical(rl, n, acc)
    } else {
        let vs: Vec<Mat> = parts.iter().map(|p| p.vertical().clone_owned()).collect();
        Core::from_vertical(rl, n, linalg::hcat(&vs.iter().collect::<Vec<_>>()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::round_rand::generate_residual_sketch;
    use crate::tensor::random_gaussian_tt;

    fn terms(count: usize, seed: u64) -> Vec<TTTensor> {
        (0..count)
            .map(|i| random_gaussian_tt(&[4, 3, 5, 3], &[1, 2, 3, 2, 1], seed + i as u64).unwrap())
            .collect()
    }

    #[test]
    fn rejects_empty_and_mismatched() {
        assert!(matches!(TTSum::new(vec![]), Err(TtError::EmptyTermList)));
        let a = random_gaussian_tt(&[3, 3], &[1, 2, 1], 1).unwrap();
        let b = random_gaussian_tt(&[3, 4], &[1, 2, 1], 1).unwrap();
        assert!(matches!(
            TTSum::new(vec![a, b]),
            Err(TtError::ModeSizeMismatch(_))
        ));
    }

    #[test]
    fn single_term_matches_single_tensor_sketch() {
        let t = terms(1, 3);
        let sum = TTSum::new(t.clone()).unwrap();
        let mut s1 = GaussianStream::new(9);
        let mut s2 = GaussianStream::new(9);
        let f = GaussianFactorSet::draw(&mut s1, &sum.mode_sizes(), 2, 2);
        let _ = GaussianFactorSet::draw(&mut s2, &sum.mode_sizes(), 2, 2);
        let mut ws = sum_partial_contractions(&sum, &f).unwrap();
        let mut w = ws[0].clone();
        let z = t[0].cores()[0].vertical().clone_owned();
        let q = linalg::orth_basis(&Mat::from_fn(4, 1, |i, _| i as f64 + 1.0));
        let a = residual_sketch_sum(&sum, &z, &q, &mut ws, &mut s1, 1, 3).unwrap();
        let b = generate_residual_sketch(&t[0], &z, &q, &mut w, &mut s2, 1, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicate_terms_double_the_sketch() {
        let t = terms(1, 5);
        let sum = TTSum::new(vec![t[0].clone(), t[0].clone()]).unwrap();
        let mut s = GaussianStream::new(2);
        let f = GaussianFactorSet::draw(&mut s, &sum.mode_sizes(), 2, 3);
        let mut ws = sum_partial_contractions(&sum, &f).unwrap();
        let v = t[0].cores()[0].vertical().clone_owned();
        let z = linalg::hcat(&[&v, &v]);
        let empty = Mat::zeros(4, 0);
        let two = residual_sketch_sum(&sum, &z, &empty, &mut ws, &mut s, 1, 3).unwrap();
        let one = &v * ws[0].w(2);
        assert!((two - one * 2.0).norm() <= 1e-14 * v.norm());
    }

    #[test]
    fn cancelling_terms_give_zero() {
        let t = terms(1, 8);
        let sum = TTSum::new(vec![t[0].clone(), t[0].scaled(-1.0)]).unwrap();
        let out = round_sum_adaptive_krp(&sum, 1e-6, 0.05, 1).unwrap();
        assert_eq!(out.tensor.max_rank(), 1);
        assert!(out.tensor.to_dense().unwrap().norm() == 0.0);
    }

    #[test]
    fn rounding_a_small_sum() {
        let t = terms(3, 20);
        let sum = TTSum::new(t).unwrap();
        let exact = sum.formal_sum().to_dense().unwrap();
        let out = round_sum_adaptive_krp(&sum, 1e-8, 0.05, 4).unwrap();
        assert!(exact.distance(&out.tensor.to_dense().unwrap()) <= 1e-8 * exact.norm());
        assert!(crate::orthogonalize::left_orthogonality_defect(&out.tensor) < 1e-10);
        assert!(round_sum_adaptive_krp(&sum, 0.0, 0.05, 4).is_err());
    }
}
