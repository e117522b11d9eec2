//! Randomized TT-rounding of a single tensor.
//!
//! The Randomize-then-Orthogonalize algorithms sketch the trailing cores of
//! the *input* once (KRP or Gaussian-TT test tensors) and then run one
//! left-to-right sweep, so no preliminary orthogonalization is needed. The
//! Orthogonalize-then-Randomize baseline right-orthogonalizes first and then
//! applies a (possibly adaptive) range finder to every vertical unfolding.

use crate::error::{TtError, TtResult};
use crate::linalg::{self, Mat};
use crate::orthogonalize::{self, check_target_ranks, TruncationRule};
use crate::random::GaussianStream;
use crate::sketch::{self, GaussianFactorSet, PartialContractionSet};
use crate::tensor::{random_gaussian_tt_from, Core, TTTensor};

/// Orthogonality violations above this are rejected by [`compression_pass`].
pub const ORTHOGONALITY_CHECK: f64 = 1e-8;

/// Parameters of adaptive KRP rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub tolerance: f64,
    pub f_init: f64,
    pub f_inc: f64,
    pub seed: u64,
    /// Use this value for `||X||` instead of the sketch-based estimate.
    pub known_norm: Option<f64>,
    /// Optional per-mode rank ceilings `l_1, ..., l_{d-1}`.
    pub max_rank_cap: Option<Vec<usize>>,
}

impl AdaptiveConfig {
    /// Tolerance `tolerance` with the default fractions `f_init = 0.1`, `f_inc = 0.05`.
    pub fn new(tolerance: f64, seed: u64) -> Self {
        Self {
            tolerance,
            f_init: 0.1,
            f_inc: 0.05,
            seed,
            known_norm: None,
            max_rank_cap: None,
        }
    }

    pub fn with_fractions(mut self, f_init: f64, f_inc: f64) -> Self {
        self.f_init = f_init;
        self.f_inc = f_inc;
        self
    }

    pub fn with_known_norm(mut self, norm: f64) -> Self {
        self.known_norm = Some(norm);
        self
    }

    pub fn validate(&self) -> TtResult<()> {
        let frac = |f: f64| f > 0.0 && f < 1.0;
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(TtError::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !frac(self.f_init) || !frac(self.f_inc) {
            return Err(TtError::InvalidConfig(format!(
                "fractions must lie in (0, 1), got f_init = {}, f_inc = {}",
                self.f_init, self.f_inc
            )));
        }
        if let Some(n) = self.known_norm {
            if !(n >= 0.0 && n.is_finite()) {
                return Err(TtError::InvalidConfig(format!(
                    "known norm must be finite and >= 0, got {n}"
                )));
            }
        }
        if let Some(cap) = &self.max_rank_cap {
            if cap.contains(&0) {
                return Err(TtError::InvalidConfig("rank caps must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Output of an adaptive rounding run.
#[derive(Debug, Clone)]
pub struct AdaptiveRounding {
    pub tensor: TTTensor,
    /// Per-mode truncation threshold that was used.
    pub tau: f64,
    /// The norm `tau` was derived from (estimated or supplied).
    pub norm: f64,
    /// One entry per mode `1..d-1`, in sweep order.
    pub modes: Vec<ModeTrace>,
}

/// How the adaptive basis of one mode was grown.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTrace {
    /// Basis size after the initial block and after each appended block; the
    /// basis at step `i` is the leading `block_ends[i]` columns of the core.
    pub block_ends: Vec<usize>,
    /// Whether growth stopped on the residual estimate rather than at the rank bound.
    pub stopped_on_estimate: bool,
}

/// Adaptive blocked range finder shared by the single-tensor and sum variants:
/// starts from the span of `initial` and appends residual sketches of `b_inc`
/// columns, drawn by `sketch(q, b)`, until `||S||_F / sqrt(b) <= tau` or the
/// basis reaches `rbar` columns.
pub(crate) fn grow_basis(
    initial: &Mat,
    rbar: usize,
    b_inc: usize,
    tau: f64,
    mut sketch: impl FnMut(&Mat, usize) -> TtResult<Mat>,
) -> TtResult<(Mat, ModeTrace)> {
    let mut q = linalg::orth_basis(initial);
    let mut trace = ModeTrace {
        block_ends: vec![q.ncols()],
        stopped_on_estimate: false,
    };
    while q.ncols() < rbar {
        let b = b_inc.min(rbar - q.ncols());
        let s = sketch(&q, b)?;
        if sketch::residual_norm_estimate(&s, b) <= tau {
            trace.stopped_on_estimate = true;
            break;
        }
        q = expand_basis(&q, &s);
        trace.block_ends.push(q.ncols());
    }
    Ok((q, trace))
}

/// Caps requested ranks by what the sweep can realize:
/// `l'_k = min(l_k, l'_{k-1} n_k, r_k)`.
pub fn effective_ranks(tt: &TTTensor, ranks: &[usize]) -> Vec<usize> {
    let n = tt.mode_sizes();
    let r = tt.ranks();
    let mut prev = 1;
    ranks
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            prev = l.min(prev * n[k]).min(r[k + 1]);
            prev
        })
        .collect()
}

/// Replaces `V(Y_k)` by the basis `q` and pushes `q^T V(Y_k)` into the next core.
fn project_core(cores: &mut [Core], k: usize, q: Mat) {
    let (rl, n, _) = cores[k].shape();
    let m = linalg::matmul_tn(&q, &cores[k].vertical());
    cores[k] = Core::from_vertical(rl, n, q);
    cores[k + 1] = cores[k + 1].left_multiply(&m);
}

/// Left-to-right sweep shared by the fixed-rank Randomize-then-Orthogonalize
/// variants: `S_k = V(Y_k) sketch(k)`, `Q_k = qr(S_k)`.
fn sketch_sweep(tt: &TTTensor, sketch_for: impl Fn(usize) -> linalg::Mat) -> TTTensor {
    let d = tt.order();
    let mut cores = tt.cores().to_vec();
    for k in 0..d - 1 {
        let s = linalg::matmul(&cores[k].vertical(), &sketch_for(k));
        let (q, _) = linalg::thin_qr(&s);
        project_core(&mut cores, k, q);
    }
    TTTensor::from_cores(cores)
}

/// Fixed-rank Randomize-then-Orthogonalize rounding with KRP sketches.
///
/// One set of `l = max l_k` Gaussian columns per mode is drawn; mode `k`
/// uses the first `l_k` columns of `W_{k+1}`.
pub fn round_fixed_krp(tt: &TTTensor, ranks: &[usize], seed: u64) -> TtResult<TTTensor> {
    check_target_ranks(tt, ranks)?;
    let caps = effective_ranks(tt, ranks);
    let width = caps.iter().copied().max().unwrap_or(1);
    let mut stream = GaussianStream::sketch(seed);
    let factors = GaussianFactorSet::draw(&mut stream, &tt.mode_sizes(), 2, width);
    let w = sketch::krp_partial_contractions_rl(tt, &factors)?;
    Ok(sketch_sweep(tt, |k| {
        w.w(k + 2).columns(0, caps[k]).clone_owned()
    }))
}

/// Fixed-rank Randomize-then-Orthogonalize rounding with a Gaussian TT sketch
/// of ranks `l_1, ..., l_{d-1}`.
pub fn round_rand_orth_tt(tt: &TTTensor, ranks: &[usize], seed: u64) -> TtResult<TTTensor> {
    check_target_ranks(tt, ranks)?;
    let caps = effective_ranks(tt, ranks);
    let mut chain = Vec::with_capacity(caps.len() + 2);
    chain.push(1);
    chain.extend_from_slice(&caps);
    chain.push(1);
    let r = random_gaussian_tt_from(&mut GaussianStream::sketch(seed), &tt.mode_sizes(), &chain);
    let w = sketch::tt_partial_contractions_rl(tt, &r)?;
    Ok(sketch_sweep(tt, |k| w.w(k + 1).clone()))
}

/// Residual sketch for basis expansion at mode `k` (1-based, `k < d`).
///
/// Uses columns `cols(Q) .. cols(Q) + b` of `W_{k+1}`; when `W` holds fewer,
/// fresh Gaussian columns for modes `k+1..d` are drawn from `stream`,
/// contracted against the *original* trailing cores of `tt` and appended.
/// Returns `S = (I - Q Q^T) Z W_{k+1}(:, cols(Q) .. cols(Q) + b)`.
pub fn generate_residual_sketch(
    tt: &TTTensor,
    z: &Mat,
    q: &Mat,
    w: &mut PartialContractionSet,
    stream: &mut GaussianStream,
    k: usize,
    b: usize,
) -> TtResult<Mat> {
    let used = q.ncols();
    ensure_columns(tt, w, stream, k, used + b)?;
    let mut s = linalg::matmul(z, &w.w(k + 1).columns(used, b));
    linalg::project_out(q, &mut s);
    Ok(s)
}

fn ensure_columns(
    tt: &TTTensor,
    w: &mut PartialContractionSet,
    stream: &mut GaussianStream,
    k: usize,
    need: usize,
) -> TtResult<()> {
    if w.cols() < need {
        let extra = need - w.cols();
        let factors = GaussianFactorSet::draw(stream, &tt.mode_sizes(), k + 1, extra);
        let fresh = sketch::krp_partial_contractions_rl(tt, &factors)?;
        w.append(fresh);
    }
    Ok(())
}

/// Orthonormal block `qn` spanning the residual sketch, re-orthogonalized
/// against `q`, appended to it.
pub(crate) fn expand_basis(q: &Mat, s: &Mat) -> Mat {
    let mut qn = linalg::orth_basis(s);
    linalg::project_out(q, &mut qn);
    let qn = linalg::orth_basis(&qn);
    linalg::hcat(&[q, &qn])
}

/// Block sizes of the adaptive loop for a mode with maximal rank `rbar`.
pub(crate) fn block_size(rbar: usize, fraction: f64) -> usize {
    ((rbar as f64 * fraction).ceil() as usize).clamp(1, rbar.max(1))
}

/// Per-mode rank bound `min(rows, cols)` of `V(Y_k)`, lowered by an optional cap.
pub(crate) fn max_mode_rank(core: &Core, cap: Option<&Vec<usize>>, k: usize) -> usize {
    let (rl, n, rr) = core.shape();
    let rbar = (rl * n).min(rr);
    match cap.and_then(|c| c.get(k)) {
        Some(&c) => rbar.min(c),
        None => rbar,
    }
}

/// Adaptive-rank Randomize-then-Orthogonalize rounding with KRP sketches.
///
/// The per-mode threshold is `tau = epsilon ||X|| / sqrt(d - 1)`, with `||X||`
/// estimated from the initial sketch unless supplied. The basis of each mode
/// grows in blocks until the residual estimate `||S||_F / sqrt(b)` drops to
/// `tau` or the maximal rank is reached.
pub fn round_adaptive_krp(tt: &TTTensor, cfg: &AdaptiveConfig) -> TtResult<AdaptiveRounding> {
    cfg.validate()?;
    let d = tt.order();
    if let Some(cap) = &cfg.max_rank_cap {
        check_target_ranks(tt, cap)?;
    }
    let mut stream = GaussianStream::sketch(cfg.seed);
    let width = block_size(tt.max_rank(), cfg.f_init);
    let factors = GaussianFactorSet::draw(&mut stream, &tt.mode_sizes(), 2, width);
    let mut w = sketch::krp_partial_contractions_rl(tt, &factors)?;
    let norm = match cfg.known_norm {
        Some(n) => n,
        None => sketch::sketched_norm(tt, &w),
    };
    let tau = cfg.tolerance * norm / ((d - 1) as f64).sqrt();

    let mut cores = tt.cores().to_vec();
    let mut modes = Vec::with_capacity(d - 1);
    for k in 0..d - 1 {
        let z = cores[k].vertical().clone_owned();
        let rbar = max_mode_rank(&cores[k], cfg.max_rank_cap.as_ref(), k);
        let b_init = block_size(rbar, cfg.f_init);
        let b_inc = block_size(rbar, cfg.f_inc);
        let empty = Mat::zeros(z.nrows(), 0);
        let s = generate_residual_sketch(tt, &z, &empty, &mut w, &mut stream, k + 1, b_init)?;
        let (q, trace) = grow_basis(&s, rbar, b_inc, tau, |q, b| {
            generate_residual_sketch(tt, &z, q, &mut w, &mut stream, k + 1, b)
        })?;
        modes.push(trace);
        project_core(&mut cores, k, q);
    }
    Ok(AdaptiveRounding {
        tensor: TTTensor::from_cores(cores),
        tau,
        norm,
        modes,
    })
}

/// Right-to-left truncated-SVD sweep over a left-orthogonal tensor; each mode
/// discards at most `tau` in Frobenius norm.
pub fn compression_pass(tt: &TTTensor, tau: f64) -> TtResult<TTTensor> {
    if !(tau >= 0.0) {
        return Err(TtError::InvalidConfig(format!(
            "threshold must be >= 0, got {tau}"
        )));
    }
    let d = tt.order();
    for (k, core) in tt.cores()[..d - 1].iter().enumerate() {
        let defect = linalg::orthonormality_defect(&core.vertical());
        if !(defect < ORTHOGONALITY_CHECK) {
            return Err(TtError::NotLeftOrthogonal {
                core: k + 1,
                defect,
            });
        }
    }
    let mut cores = tt.cores().to_vec();
    for k in (1..d).rev() {
        let (_, n, rr) = cores[k].shape();
        let t = orthogonalize::truncated_svd(
            &cores[k].horizontal().clone_owned(),
            TruncationRule::Tolerance(tau),
        )?;
        cores[k] = Core::from_horizontal(n, rr, t.vt);
        let us = Mat::from_fn(t.u.nrows(), t.rank, |i, j| {
            t.u[(i, j)] * t.singular_values[j]
        });
        cores[k - 1] = cores[k - 1].right_multiply(&us);
    }
    Ok(TTTensor::from_cores(cores))
}

/// Rank or tolerance request for [`round_orth_rand`].
#[derive(Debug, Clone, PartialEq)]
pub enum OrthRandRule {
    Ranks(Vec<usize>),
    /// Relative tolerance; residuals are tracked exactly.
    Tolerance(f64),
}

/// Adaptive randomized range finder with exact residual norms.
///
/// Grows an orthonormal basis of `range(a)` in Gaussian blocks of `block`
/// columns until `||a - Q Q^T a||_F <= tau` or `min(rows, cols)` columns
/// are reached. At least one block is always drawn.
pub fn adaptive_range_finder(a: &Mat, tau: f64, block: usize, stream: &mut GaussianStream) -> Mat {
    let rbar = a.nrows().min(a.ncols()).max(1);
    let block = block.max(1);
    let mut q = Mat::zeros(a.nrows(), 0);
    loop {
        let b = block.min(rbar - q.ncols());
        let omega = stream.matrix(a.ncols(), b);
        let mut s = linalg::matmul(a, &omega);
        linalg::project_out(&q, &mut s);
        q = expand_basis(&q, &s);
        if q.ncols() >= rbar || linalg::projection_residual(&q, a) <= tau {
            return q;
        }
    }
}

/// Fraction of `min(rows, cols)` used as the block size of the adaptive range finder.
pub const ORTH_RAND_BLOCK_FRACTION: f64 = 0.05;

/// Orthogonalize-then-Randomize rounding.
///
/// After a right-to-left orthogonalization, each `V(Y_k)` is compressed by a
/// Gaussian range finder: `l_k` columns in rank mode, or adaptively with
/// exact residual tracking against `tau = epsilon ||X|| / sqrt(d-1)`.
pub fn round_orth_rand(tt: &TTTensor, rule: &OrthRandRule, seed: u64) -> TtResult<TTTensor> {
    let d = tt.order();
    match rule {
        OrthRandRule::Ranks(r) => check_target_ranks(tt, r)?,
        OrthRandRule::Tolerance(eps) if !(*eps >= 0.0) => {
            return Err(TtError::InvalidConfig(format!(
                "tolerance must be >= 0, got {eps}"
            )))
        }
        _ => {}
    }
    let y = orthogonalize::right_orthogonalize(tt);
    let tau = match rule {
        OrthRandRule::Tolerance(eps) => eps * y.cores()[0].norm() / ((d - 1) as f64).sqrt(),
        OrthRandRule::Ranks(_) => 0.0,
    };
    let mut stream = GaussianStream::sketch(seed);
    let mut cores = y.into_cores();
    for k in 0..d - 1 {
        let z = cores[k].vertical().clone_owned();
        let q = match rule {
            OrthRandRule::Ranks(r) => {
                let l = r[k].min(z.nrows()).min(z.ncols());
                let omega = stream.matrix(z.ncols(), l);
                linalg::orth_basis(&linalg::matmul(&z, &omega))
            }
            OrthRandRule::Tolerance(_) => {
                let rbar = z.nrows().min(z.ncols());
                adaptive_range_finder(
                    &z,
                    tau,
                    block_size(rbar, ORTH_RAND_BLOCK_FRACTION),
                    &mut stream,
                )
            }
        };
        project_core(&mut cores, k, q);
    }
    Ok(TTTensor::from_cores(cores))
}
