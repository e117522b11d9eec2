//! Orthogonalization sweeps, truncated SVD and deterministic TT-rounding.

use crate::error::{TtError, TtResult};
use crate::linalg::{self, Mat};
use crate::tensor::{Core, TTTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Make every horizontal unfolding except the first one row-orthonormal.
    RightToLeft,
    /// Make every vertical unfolding except the last one column-orthonormal.
    LeftToRight,
}

/// Truncation criterion for a single SVD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationRule {
    /// Keep the fewest singular values whose discarded tail has norm `<= tau`.
    Tolerance(f64),
    /// Keep at most this many singular values.
    Rank(usize),
}

/// Target for deterministic rounding.
#[derive(Debug, Clone, PartialEq)]
pub enum RoundingTarget {
    /// Relative accuracy `epsilon`: `||X - Y|| <= epsilon ||X||`.
    Relative(f64),
    /// Interior ranks `l_1, ..., l_{d-1}`.
    Ranks(Vec<usize>),
}

pub fn orthogonalize(tt: &TTTensor, direction: Direction) -> TTTensor {
    match direction {
        Direction::RightToLeft => right_orthogonalize(tt),
        Direction::LeftToRight => left_orthogonalize(tt),
    }
}

/// Right-to-left sweep: `H(X_k)^T = QR`, `H(Y_k) = Q^T`, `V(Y_{k-1}) = V(X_{k-1}) R^T`.
pub fn right_orthogonalize(tt: &TTTensor) -> TTTensor {
    let mut cores: Vec<Core> = tt.cores().to_vec();
    for k in (1..cores.len()).rev() {
        let (_, n, rr) = cores[k].shape();
        let (q, r) = linalg::thin_qr(&cores[k].horizontal().transpose());
        cores[k] = Core::from_horizontal(n, rr, q.transpose());
        cores[k - 1] = cores[k - 1].right_multiply(&r.transpose());
    }
    TTTensor::from_cores(cores)
}

/// Left-to-right sweep: `V(X_k) = QR`, `V(Y_k) = Q`, `H(Y_{k+1}) = R H(X_{k+1})`.
pub fn left_orthogonalize(tt: &TTTensor) -> TTTensor {
    let mut cores: Vec<Core> = tt.cores().to_vec();
    for k in 0..cores.len() - 1 {
        let (rl, n, _) = cores[k].shape();
        let (q, r) = linalg::thin_qr(&cores[k].vertical());
        cores[k] = Core::from_vertical(rl, n, q);
        cores[k + 1] = cores[k + 1].left_multiply(&r);
    }
    TTTensor::from_cores(cores)
}

/// Frobenius norm computed from the first core after a right-to-left sweep.
pub fn norm_exact(tt: &TTTensor) -> f64 {
    right_orthogonalize(tt).cores()[0].norm()
}

/// Result of [`truncated_svd`].
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub u: Mat,
    pub singular_values: Vec<f64>,
    pub vt: Mat,
    pub rank: usize,
    /// Norm of the discarded singular values.
    pub discarded: f64,
}

/// Number of singular values to keep under `rule`; always at least one.
pub fn truncation_rank(singular_values: &[f64], rule: TruncationRule) -> usize {
    let p = singular_values.len();
    if p == 0 {
        return 0;
    }
    match rule {
        TruncationRule::Rank(l) => l.clamp(1, p),
        TruncationRule::Tolerance(tau) => {
            // tail[s] = sqrt(sum_{j >= s} sigma_j^2)
            let mut tail = vec![0.0; p + 1];
            for j in (0..p).rev() {
                tail[j] = tail[j + 1] + singular_values[j] * singular_values[j];
            }
            (1..=p).find(|&s| tail[s].sqrt() <= tau).unwrap_or(p)
        }
    }
}

pub fn truncated_svd(m: &Mat, rule: TruncationRule) -> TtResult<TruncatedSvd> {
    let svd = linalg::svd(m)?;
    let rank = truncation_rank(&svd.singular_values, rule);
    let discarded = svd.singular_values[rank..]
        .iter()
        .map(|s| s * s)
        .sum::<f64>()
        .sqrt();
    Ok(TruncatedSvd {
        u: svd.u.columns(0, rank).clone_owned(),
        singular_values: svd.singular_values[..rank].to_vec(),
        vt: svd.vt.rows(0, rank).clone_owned(),
        rank,
        discarded,
    })
}

pub(crate) fn check_target_ranks(tt: &TTTensor, ranks: &[usize]) -> TtResult<()> {
    let d = tt.order();
    if ranks.len() != d - 1 {
        return Err(TtError::InvalidRanks(format!(
            "expected {} target ranks for an order-{d} tensor, got {}",
            d - 1,
            ranks.len()
        )));
    }
    if ranks.contains(&0) {
        return Err(TtError::InvalidRanks(
            "target ranks must be positive".into(),
        ));
    }
    Ok(())
}

/// Deterministic TT-rounding: right-to-left orthogonalization followed by a
/// left-to-right QR + truncated-SVD compression sweep.
///
/// In relative mode the per-mode threshold is `tau = epsilon ||Y_1|| / sqrt(d-1)`,
/// which bounds the total error by `epsilon ||X||`. Requested ranks larger than
/// the unfolding allows are capped.
pub fn round_deterministic(tt: &TTTensor, target: &RoundingTarget) -> TtResult<TTTensor> {
    let d = tt.order();
    if d == 1 {
        return Ok(tt.clone());
    }
    match target {
        RoundingTarget::Relative(eps) if !(*eps >= 0.0) => {
            return Err(TtError::InvalidConfig(format!(
                "tolerance must be >= 0, got {eps}"
            )))
        }
        RoundingTarget::Ranks(ranks) => check_target_ranks(tt, ranks)?,
        _ => {}
    }
    let y = right_orthogonalize(tt);
    let mut cores: Vec<Core> = y.into_cores();
    let tau = match target {
        RoundingTarget::Relative(eps) => eps * cores[0].norm() / ((d - 1) as f64).sqrt(),
        RoundingTarget::Ranks(_) => 0.0,
    };
    for k in 0..d - 1 {
        let rule = match target {
            RoundingTarget::Relative(_) => TruncationRule::Tolerance(tau),
            RoundingTarget::Ranks(ranks) => TruncationRule::Rank(ranks[k]),
        };
        let (rl, n, _) = cores[k].shape();
        let (q, r) = linalg::thin_qr(&cores[k].vertical());
        let t = truncated_svd(&r, rule)?;
        cores[k] = Core::from_vertical(rl, n, linalg::matmul(&q, &t.u));
        let sv = Mat::from_fn(t.rank, t.vt.ncols(), |i, j| {
            t.singular_values[i] * t.vt[(i, j)]
        });
        cores[k + 1] = cores[k + 1].left_multiply(&sv);
    }
    Ok(TTTensor::from_cores(cores))
}

/// `max_k ||V(Y_k)^T V(Y_k) - I||_F` over cores `1..d-1`.
pub fn left_orthogonality_defect(tt: &TTTensor) -> f64 {
    let cores = tt.cores();
    cores[..cores.len() - 1]
        .iter()
        .map(|c| linalg::orthonormality_defect(&c.vertical()))
        .fold(0.0, f64::max)
}

/// `max_k ||H(Y_k) H(Y_k)^T - I||_F` over cores `2..d`.
pub fn right_orthogonality_defect(tt: &TTTensor) -> f64 {
    tt.cores()[1..]
        .iter()
        .map(|c| linalg::orthonormality_defect(&c.horizontal().transpose()))
        .fold(0.0, f64::max)
}
