//! Dispatch from CLI algorithm names to library calls.

use std::time::Instant;

use anyhow::{bail, Result};
use clap::ValueEnum;
use ttkrp::linalg::count_flops;
use ttkrp::tensor::formal_difference;
use ttkrp::{
    compression_pass, norm_exact, round_adaptive_krp, round_deterministic, round_fixed_krp,
    round_orth_rand, round_rand_orth_tt, AdaptiveConfig, OrthRandRule, RoundingTarget, TTTensor,
};

use crate::record::BenchRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    /// Deterministic rounding.
    Det,
    /// Randomize-then-Orthogonalize with a Gaussian TT sketch (ranks only).
    RandOrth,
    /// Orthogonalize-then-Randomize.
    OrthRand,
    /// Fixed-rank KRP sketching (ranks only).
    KrpFix,
    /// Adaptive KRP sketching (tolerance only).
    KrpAdapt,
    /// Adaptive KRP sketching followed by a compression pass (tolerance only).
    KrpAdaptR,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Det => "det",
            Algo::RandOrth => "rand-orth",
            Algo::OrthRand => "orth-rand",
            Algo::KrpFix => "krp-fix",
            Algo::KrpAdapt => "krp-adapt",
            Algo::KrpAdaptR => "krp-adapt-r",
        }
    }

    pub fn supports_ranks(self) -> bool {
        matches!(
            self,
            Algo::Det | Algo::RandOrth | Algo::OrthRand | Algo::KrpFix
        )
    }

    pub fn supports_tolerance(self) -> bool {
        matches!(
            self,
            Algo::Det | Algo::OrthRand | Algo::KrpAdapt | Algo::KrpAdaptR
        )
    }
}

/// Rank list or relative tolerance.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Ranks(Vec<usize>),
    Tolerance(f64),
}

fn run(x: &TTTensor, algo: Algo, target: &Target, seed: u64) -> Result<TTTensor> {
    match target {
        Target::Ranks(_) if !algo.supports_ranks() => {
            bail!("algorithm {} requires --tol", algo.name())
        }
        Target::Tolerance(_) if !algo.supports_tolerance() => {
            bail!("algorithm {} requires --ranks", algo.name())
        }
        _ => {}
    }
    let y = match (algo, target) {
        (Algo::Det, Target::Ranks(r)) => round_deterministic(x, &RoundingTarget::Ranks(r.clone()))?,
        (Algo::Det, Target::Tolerance(t)) => round_deterministic(x, &RoundingTarget::Relative(*t))?,
        (Algo::RandOrth, Target::Ranks(r)) => round_rand_orth_tt(x, r, seed)?,
        (Algo::OrthRand, Target::Ranks(r)) => {
            round_orth_rand(x, &OrthRandRule::Ranks(r.clone()), seed)?
        }
        (Algo::OrthRand, Target::Tolerance(t)) => {
            round_orth_rand(x, &OrthRandRule::Tolerance(*t), seed)?
        }
        (Algo::KrpFix, Target::Ranks(r)) => round_fixed_krp(x, r, seed)?,
        (Algo::KrpAdapt, Target::Tolerance(t)) => {
            round_adaptive_krp(x, &AdaptiveConfig::new(*t, seed))?.tensor
        }
        (Algo::KrpAdaptR, Target::Tolerance(t)) => {
            let out = round_adaptive_krp(x, &AdaptiveConfig::new(*t, seed))?;
            compression_pass(&out.tensor, out.tau)?
        }
        _ => unreachable!("target kind checked above"),
    };
    Ok(y)
}

/// `||x - y|| / ||x||` in TT arithmetic.
pub fn relative_error(x: &TTTensor, y: &TTTensor) -> Result<f64> {
    let nx = norm_exact(x);
    let diff = norm_exact(&formal_difference(x, y)?);
    Ok(if nx == 0.0 { diff } else { diff / nx })
}

/// Runs one algorithm and records cost and accuracy.
pub fn run_recorded(
    x: &TTTensor,
    algo: Algo,
    target: &Target,
    seed: u64,
) -> Result<(TTTensor, BenchRecord)> {
    let start = Instant::now();
    let (y, flops) = count_flops(|| run(x, algo, target, seed));
    let seconds = start.elapsed().as_secs_f64();
    let y = y?;
    let (target_rank, tolerance) = match target {
        Target::Ranks(r) => (r.iter().copied().max(), None),
        Target::Tolerance(t) => (None, Some(*t)),
    };
    let record = BenchRecord {
        algorithm: algo.name().to_string(),
        target_rank,
        tolerance,
        relative_error: relative_error(x, &y)?,
        ranks: y.ranks(),
        seconds,
        flops,
        seed,
    };
    Ok((y, record))
}
