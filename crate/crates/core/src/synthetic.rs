//! Synthetic test tensors with controlled compressibility.

use crate::error::{TtError, TtResult};
use crate::orthogonalize::norm_exact;
use crate::tensor::{formal_sum, random_gaussian_tt, TTTensor};

/// Random Gaussian TT with uniform interior rank `rank`, scaled to unit norm.
pub fn normalized_random_tt(d: usize, n: usize, rank: usize, seed: u64) -> TtResult<TTTensor> {
    if d < 2 || n == 0 || rank == 0 {
        return Err(TtError::InvalidConfig(format!(
            "need d >= 2, n >= 1, rank >= 1 (got {d}, {n}, {rank})"
        )));
    }
    let mut ranks = vec![rank; d + 1];
    ranks[0] = 1;
    ranks[d] = 1;
    let x = random_gaussian_tt(&vec![n; d], &ranks, seed)?;
    let nrm = norm_exact(&x);
    Ok(x.scaled(1.0 / nrm))
}

/// `X = Y + eps_pert Z` with independent unit-norm random TTs `Y`, `Z` of
/// rank `rank`, stored as their formal sum (ranks `2 rank`).
///
/// Rounding `X` to rank `rank` then has a relative error close to `eps_pert`.
pub fn perturbed_low_rank(
    d: usize,
    n: usize,
    rank: usize,
    eps_pert: f64,
    seed: u64,
) -> TtResult<TTTensor> {
    if !(eps_pert >= 0.0 && eps_pert.is_finite()) {
        return Err(TtError::InvalidConfig(format!(
            "perturbation must be finite and >= 0, got {eps_pert}"
        )));
    }
    let y = normalized_random_tt(d, n, rank, seed.wrapping_mul(2))?;
    let z = normalized_random_tt(d, n, rank, seed.wrapping_mul(2).wrapping_add(1))?;
    formal_sum(&[y, z.scaled(eps_pert)])
}

/// Weighted formal sum `sum_j decay^j X_j` of `terms` unit-norm random TTs of
/// rank `rank`; its singular spectra decay geometrically, so tolerance-driven
/// rounding selects ranks that grow with the accuracy requested.
pub fn decaying_sum(
    d: usize,
    n: usize,
    rank: usize,
    terms: usize,
    decay: f64,
    seed: u64,
) -> TtResult<TTTensor> {
    if terms == 0 {
        return Err(TtError::EmptyTermList);
    }
    let parts = (0..terms)
        .map(|j| {
            let x =
                normalized_random_tt(d, n, rank, seed.wrapping_mul(1000).wrapping_add(j as u64))?;
            Ok(x.scaled(decay.powi(j as i32)))
        })
        .collect::<TtResult<Vec<_>>>()?;
    formal_sum(&parts)
}
