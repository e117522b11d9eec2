//! Tensor-train rounding with Khatri-Rao product sketches.
//!
//! The crate provides a TT tensor type, deterministic and randomized rounding
//! algorithms, rounding of sums of TT tensors, and a TT-GMRES solver for a
//! parametric diffusion model problem.

// `!(x >= 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod io;
pub mod linalg;
pub mod orthogonalize;
pub mod random;
pub mod round_rand;
pub mod sketch;
pub mod solver;
pub mod sum_round;
pub mod synthetic;
pub mod tensor;

pub use error::{TtError, TtResult};
pub use orthogonalize::{norm_exact, round_deterministic, RoundingTarget, TruncationRule};
pub use round_rand::{
    compression_pass, round_adaptive_krp, round_fixed_krp, round_orth_rand, round_rand_orth_tt,
    AdaptiveConfig, ModeTrace, OrthRandRule,
};
pub use sum_round::{round_sum_adaptive_krp, TTSum};
pub use tensor::{formal_sum, random_gaussian_tt, Core, DenseTensor, TTTensor};
