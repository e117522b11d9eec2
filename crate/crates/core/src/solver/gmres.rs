//! TT-GMRES with pluggable Sum+Round strategies.
//!
//! Arnoldi with modified Gram-Schmidt, where every Krylov vector is a TT
//! tensor. The operator application and every orthogonalization update
//! produce sums of TT tensors that are immediately rounded. Convergence is
//! monitored through the Givens-rotated Hessenberg residual; the true
//! residual `||b - A x|| / ||b||` is evaluated in TT arithmetic at the end.

use std::time::Instant;

use crate::error::{TtError, TtResult};
use crate::orthogonalize::{norm_exact, round_deterministic, RoundingTarget};
use crate::round_rand::{compression_pass, round_rand_orth_tt};
use crate::sum_round::{round_sum_adaptive_krp, TTSum};
use crate::tensor::TTTensor;

use super::kronecker::KroneckerSumOperator;

/// How sums of TT tensors are compressed inside the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundingStrategy {
    /// Formal sum followed by deterministic rounding.
    Deterministic,
    /// Formal sum followed by Randomize-then-Orthogonalize with a Gaussian TT
    /// sketch and a compression pass.
    RandOrthTT,
    /// Adaptive KRP rounding of the sum without forming it, then a compression pass.
    AdaptiveKRPSum,
}

/// Rank slack of the Gaussian-TT sketch over the largest summand rank.
const RAND_ORTH_OVERSAMPLING: usize = 5;
/// Block fraction of the adaptive sum rounding.
const SUM_F_INC: f64 = 0.05;
/// Accuracy of the adaptive sketch pass relative to the rounding tolerance.
const SKETCH_TOL_FRACTION: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct GmresConfig {
    pub tolerance: f64,
    pub max_iter: usize,
    pub strategy: RoundingStrategy,
    /// Relative accuracy of every rounding; defaults to `0.1 * tolerance`.
    pub round_tol: Option<f64>,
    pub seed: u64,
    /// Right preconditioner given as the single-term operator `P^{-1}`.
    pub preconditioner: Option<KroneckerSumOperator>,
    /// Also evaluate the true residual every this many iterations.
    pub true_residual_every: Option<usize>,
}

impl GmresConfig {
    pub fn new(tolerance: f64, max_iter: usize, strategy: RoundingStrategy, seed: u64) -> Self {
        Self {
            tolerance,
            max_iter,
            strategy,
            round_tol: None,
            seed,
            preconditioner: None,
            true_residual_every: None,
        }
    }

    pub fn with_preconditioner(mut self, p_inv: KroneckerSumOperator) -> Self {
        self.preconditioner = Some(p_inv);
        self
    }

    pub fn round_tolerance(&self) -> f64 {
        self.round_tol.unwrap_or(0.1 * self.tolerance)
    }

    fn validate(&self, modes: &[usize]) -> TtResult<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(TtError::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !(self.round_tolerance() > 0.0 && self.round_tolerance() < 1.0) {
            return Err(TtError::InvalidConfig(format!(
                "rounding tolerance must lie in (0, 1), got {}",
                self.round_tolerance()
            )));
        }
        if self.max_iter == 0 {
            return Err(TtError::InvalidConfig("max_iter must be >= 1".into()));
        }
        if let Some(p) = &self.preconditioner {
            if p.num_terms() != 1 {
                return Err(TtError::InvalidConfig(
                    "preconditioner must be a single Kronecker product".into(),
                ));
            }
            if p.mode_sizes() != modes {
                return Err(TtError::ModeSizeMismatch(
                    "preconditioner and right-hand side differ in mode sizes".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Outcome of [`tt_gmres`].
#[derive(Debug, Clone)]
pub struct GmresResult {
    pub solution: TTTensor,
    /// Arnoldi residual estimate `|g_{j+1}| / ||b||` after each iteration.
    pub residual_history: Vec<f64>,
    /// `(iteration, ||b - A x_j|| / ||b||)` for the iterations where it was evaluated.
    pub true_residual_history: Vec<(usize, f64)>,
    /// Largest TT rank of the new Krylov vector at each iteration.
    pub max_rank_history: Vec<usize>,
    /// Cumulative seconds spent rounding, after each iteration.
    pub rounding_seconds: Vec<f64>,
    pub converged: bool,
    /// True relative residual of `solution`, computed in TT arithmetic.
    pub final_residual: f64,
}

impl GmresResult {
    pub fn iterations(&self) -> usize {
        self.residual_history.len()
    }
}

struct Rounder {
    strategy: RoundingStrategy,
    tol: f64,
    seed: u64,
    calls: u64,
    seconds: f64,
}

impl Rounder {
    fn next_seed(&mut self) -> u64 {
        self.calls += 1;
        self.seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(self.calls)
    }

    fn round(&mut self, sum: TTSum) -> TtResult<TTTensor> {
        let start = Instant::now();
        let seed = self.next_seed();
        let out = self.round_inner(sum, seed);
        self.seconds += start.elapsed().as_secs_f64();
        out
    }

    fn round_inner(&self, sum: TTSum, seed: u64) -> TtResult<TTTensor> {
        let d = sum.order();
        match self.strategy {
            RoundingStrategy::Deterministic => {
                round_deterministic(&sum.formal_sum(), &RoundingTarget::Relative(self.tol))
            }
            RoundingStrategy::AdaptiveKRPSum => {
                // A tighter sketch pass keeps its error well below the
                // compression threshold, so the final truncation sees the
                // same spectrum as deterministic rounding would.
                let out =
                    round_sum_adaptive_krp(&sum, SKETCH_TOL_FRACTION * self.tol, SUM_F_INC, seed)?;
                if out.tau == 0.0 {
                    return Ok(out.tensor);
                }
                compression_pass(&out.tensor, out.tau / SKETCH_TOL_FRACTION)
            }
            RoundingStrategy::RandOrthTT => {
                let ranks: Vec<usize> = (1..d)
                    .map(|k| {
                        sum.terms().iter().map(|t| t.ranks()[k]).max().unwrap_or(1)
                            + RAND_ORTH_OVERSAMPLING
                    })
                    .collect();
                let y = round_rand_orth_tt(&sum.formal_sum(), &ranks, seed)?;
                let norm = y.cores()[d - 1].norm();
                compression_pass(&y, self.tol * norm / ((d - 1) as f64).sqrt())
            }
        }
    }

    /// `sum_i c_i v_i`, rounded; deterministic strategies accumulate pairwise.
    fn combine(&mut self, coeffs: &[f64], vectors: &[TTTensor]) -> TtResult<TTTensor> {
        let scaled: Vec<TTTensor> = coeffs
            .iter()
            .zip(vectors)
            .map(|(c, v)| v.scaled(*c))
            .collect();
        match self.strategy {
            RoundingStrategy::AdaptiveKRPSum => self.round(TTSum::new(scaled)?),
            _ => {
                let mut iter = scaled.into_iter();
                let mut acc = iter.next().ok_or(TtError::EmptyTermList)?;
                for v in iter {
                    acc = self.round(TTSum::new(vec![acc, v])?)?;
                }
                Ok(acc)
            }
        }
    }
}

/// `||b - A x|| / ||b||` evaluated exactly in TT arithmetic.
pub fn relative_residual(op: &KroneckerSumOperator, rhs: &TTTensor, x: &TTTensor) -> TtResult<f64> {
    let mut terms = vec![rhs.clone()];
    terms.extend(
        op.apply(x)?
            .into_terms()
            .into_iter()
            .map(|t| t.scaled(-1.0)),
    );
    let r = TTSum::new(terms)?.formal_sum();
    Ok(norm_exact(&r) / norm_exact(rhs))
}

fn apply_preconditioner(p: Option<&KroneckerSumOperator>, v: &TTTensor) -> TtResult<TTTensor> {
    match p {
        Some(p) => p.apply_term(0, v),
        None => Ok(v.clone()),
    }
}

/// Upper-triangular solve `R y = g` for the leading `m x m` block of the rotated Hessenberg matrix.
fn back_substitute(h: &[Vec<f64>], g: &[f64], m: usize) -> Vec<f64> {
    let mut y = vec![0.0; m];
    for i in (0..m).rev() {
        let mut s = g[i];
        for j in i + 1..m {
            s -= h[j][i] * y[j];
        }
        y[i] = s / h[i][i];
    }
    y
}

/// Solves `A x = b` by right-preconditioned TT-GMRES without restarts.
pub fn tt_gmres(
    op: &KroneckerSumOperator,
    rhs: &TTTensor,
    cfg: &GmresConfig,
) -> TtResult<GmresResult> {
    let modes = rhs.mode_sizes();
    if op.mode_sizes() != modes {
        return Err(TtError::ModeSizeMismatch(format!(
            "operator acts on {:?}, right-hand side has {modes:?}",
            op.mode_sizes()
        )));
    }
    cfg.validate(&modes)?;
    let p_inv = cfg.preconditioner.as_ref();
    let mut rounder = Rounder {
        strategy: cfg.strategy,
        tol: cfg.round_tolerance(),
        seed: cfg.seed,
        calls: 0,
        seconds: 0.0,
    };

    let beta = norm_exact(rhs);
    if beta == 0.0 {
        return Ok(GmresResult {
            solution: TTTensor::zeros(&modes)?,
            residual_history: vec![],
            true_residual_history: vec![],
            max_rank_history: vec![],
            rounding_seconds: vec![],
            converged: true,
            final_residual: 0.0,
        });
    }

    let mut basis = vec![rhs.scaled(1.0 / beta)];
    // columns of the Hessenberg matrix, rotated in place
    let mut h: Vec<Vec<f64>> = Vec::new();
    let mut rotations: Vec<(f64, f64)> = Vec::new();
    let mut g = vec![beta];
    let mut residual_history = Vec::new();
    let mut true_residual_history = Vec::new();
    let mut max_rank_history = Vec::new();
    let mut rounding_seconds = Vec::new();
    let mut converged = false;

    let assemble = |rounder: &mut Rounder,
                    h: &[Vec<f64>],
                    g: &[f64],
                    basis: &[TTTensor]|
     -> TtResult<TTTensor> {
        let m = h.len();
        let y = back_substitute(h, g, m);
        let u = rounder.combine(&y, &basis[..m])?;
        apply_preconditioner(p_inv, &u)
    };

    for j in 0..cfg.max_iter {
        let t = apply_preconditioner(p_inv, &basis[j])?;
        let mut w = rounder.round(op.apply(&t)?)?;
        let mut col = vec![0.0; j + 2];
        for (i, v) in basis.iter().enumerate() {
            let hij = w.dot(v)?;
            col[i] = hij;
            w = rounder.round(TTSum::new(vec![w, v.scaled(-hij)])?)?;
        }
        let hnext = norm_exact(&w);
        col[j + 1] = hnext;
        max_rank_history.push(w.max_rank());

        for (i, &(c, s)) in rotations.iter().enumerate() {
            let (a, b) = (col[i], col[i + 1]);
            col[i] = c * a + s * b;
            col[i + 1] = -s * a + c * b;
        }
        let denom = col[j].hypot(col[j + 1]);
        let (c, s) = if denom == 0.0 {
            (1.0, 0.0)
        } else {
            (col[j] / denom, col[j + 1] / denom)
        };
        col[j] = denom;
        col[j + 1] = 0.0;
        rotations.push((c, s));
        g.push(-s * g[j]);
        g[j] *= c;
        h.push(col);

        let estimate = g[j + 1].abs() / beta;
        residual_history.push(estimate);
        rounding_seconds.push(rounder.seconds);
        if let Some(every) = cfg.true_residual_every {
            if every > 0 && (j + 1) % every == 0 {
                let x = assemble(&mut rounder, &h, &g, &basis)?;
                true_residual_history.push((j + 1, relative_residual(op, rhs, &x)?));
            }
        }
        if estimate <= cfg.tolerance {
            converged = true;
            break;
        }
        if hnext <= f64::EPSILON * beta {
            return Err(TtError::Breakdown(j + 1));
        }
        basis.push(w.scaled(1.0 / hnext));
    }

    let solution = assemble(&mut rounder, &h, &g, &basis)?;
    let final_residual = relative_residual(op, rhs, &solution)?;
    if let Some(last) = rounding_seconds.last_mut() {
        *last = rounder.seconds;
    }
    Ok(GmresResult {
        solution,
        residual_history,
        true_residual_history,
        max_rank_history,
        rounding_seconds,
        converged,
        final_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::kronecker::ModeFactor;
    use crate::tensor::random_gaussian_tt;

    #[test]
    fn identity_converges_in_one_step() {
        let op =
            KroneckerSumOperator::new(vec![vec![ModeFactor::Identity(4), ModeFactor::Identity(3)]])
                .unwrap();
        let b = random_gaussian_tt(&[4, 3], &[1, 2, 1], 1).unwrap();
        for strategy in [
            RoundingStrategy::Deterministic,
            RoundingStrategy::AdaptiveKRPSum,
            RoundingStrategy::RandOrthTT,
        ] {
            let r = tt_gmres(&op, &b, &GmresConfig::new(1e-8, 5, strategy, 3)).unwrap();
            assert!(r.converged);
            assert_eq!(r.iterations(), 1);
            let (x, bd) = (r.solution.to_dense().unwrap(), b.to_dense().unwrap());
            assert!(x.distance(&bd) <= 1e-8 * bd.norm());
        }
    }

    #[test]
    fn diagonal_system() {
        let op = KroneckerSumOperator::new(vec![
            vec![
                ModeFactor::Diagonal(vec![1.0, 2.0, 3.0]),
                ModeFactor::Identity(2),
            ],
            vec![
                ModeFactor::Identity(3),
                ModeFactor::Diagonal(vec![1.0, 4.0]),
            ],
        ])
        .unwrap();
        let b = TTTensor::rank_one(&[vec![1.0; 3], vec![1.0; 2]]).unwrap();
        let r = tt_gmres(
            &op,
            &b,
            &GmresConfig::new(1e-10, 10, RoundingStrategy::Deterministic, 0),
        )
        .unwrap();
        assert!(r.converged);
        let x = r.solution.to_dense().unwrap();
        for i in 0..3 {
            for j in 0..2 {
                let expect = 1.0 / ([1.0, 2.0, 3.0][i] + [1.0, 4.0][j]);
                assert!((x.entry(&[i + 1, j + 1]).unwrap() - expect).abs() < 1e-9);
            }
        }
        assert!(r.final_residual < 1e-9);
    }

    #[test]
    fn rejects_bad_config() {
        let op =
            KroneckerSumOperator::new(vec![vec![ModeFactor::Identity(2), ModeFactor::Identity(2)]])
                .unwrap();
        let b = TTTensor::rank_one(&[vec![1.0; 2], vec![1.0; 2]]).unwrap();
        assert!(tt_gmres(
            &op,
            &b,
            &GmresConfig::new(0.0, 5, RoundingStrategy::Deterministic, 0)
        )
        .is_err());
        let two = KroneckerSumOperator::new(vec![
            vec![ModeFactor::Identity(2), ModeFactor::Identity(2)],
            vec![ModeFactor::Identity(2), ModeFactor::Identity(2)],
        ])
        .unwrap();
        let cfg =
            GmresConfig::new(1e-6, 5, RoundingStrategy::Deterministic, 0).with_preconditioner(two);
        assert!(matches!(
            tt_gmres(&op, &b, &cfg),
            Err(TtError::InvalidConfig(_))
        ));
    }
}
