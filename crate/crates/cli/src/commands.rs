use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use ttkrp::io::{load_tt, save_tt};
use ttkrp::sketch::estimate_norm_krp;
use ttkrp::solver::{build_cookie_problem, tt_gmres, GmresConfig, RoundingStrategy};
use ttkrp::synthetic::{normalized_random_tt, perturbed_low_rank};
use ttkrp::{norm_exact, TTTensor};

use crate::algorithms::{run_recorded, Algo, Target};
use crate::record::{fmt_f64, full_precision, BenchRecord};
use crate::StrategyArg;

pub fn round(
    input: &Path,
    output: &Path,
    ranks: Option<Vec<usize>>,
    tol: Option<f64>,
    algo: Algo,
    seed: u64,
) -> Result<()> {
    let x = load_tt(input).with_context(|| format!("reading {}", input.display()))?;
    let target = match (ranks, tol) {
        (Some(r), None) => Target::Ranks(r),
        (None, Some(t)) => Target::Tolerance(t),
        _ => bail!("exactly one of --ranks and --tol is required"),
    };
    let (y, record) = run_recorded(&x, algo, &target, seed)?;
    save_tt(&y, output).with_context(|| format!("writing {}", output.display()))?;
    println!("{}", serde_json::to_string(&record)?);
    Ok(())
}

pub struct SyntheticSpec {
    pub d: usize,
    pub n: usize,
    pub rank: usize,
    pub eps_pert: f64,
    pub tensor_seed: u64,
}

pub fn bench_synthetic(
    spec: &SyntheticSpec,
    targets: Option<Vec<usize>>,
    tols: Option<Vec<f64>>,
    seeds: u64,
    csv_path: &Path,
) -> Result<()> {
    if spec.d < 2 || spec.n == 0 || spec.rank == 0 || seeds == 0 {
        bail!("d must be >= 2 and n, rank, seeds must be positive");
    }
    let x = perturbed_low_rank(spec.d, spec.n, spec.rank, spec.eps_pert, spec.tensor_seed)?;
    let cells: Vec<(Algo, Target)> = match (targets, tols) {
        (Some(ts), None) => ts
            .iter()
            .flat_map(|&t| {
                [Algo::Det, Algo::RandOrth, Algo::OrthRand, Algo::KrpFix]
                    .map(|a| (a, Target::Ranks(vec![t; spec.d - 1])))
            })
            .collect(),
        (None, Some(ts)) => ts
            .iter()
            .flat_map(|&t| {
                [Algo::Det, Algo::OrthRand, Algo::KrpAdapt, Algo::KrpAdaptR]
                    .map(|a| (a, Target::Tolerance(t)))
            })
            .collect(),
        _ => bail!("exactly one of --targets and --tols is required"),
    };
    let mut out = csv::Writer::from_path(csv_path)
        .with_context(|| format!("creating {}", csv_path.display()))?;
    out.write_record(BenchRecord::CSV_HEADER)?;
    for (algo, target) in &cells {
        for seed in 0..seeds {
            let (_, record) = run_recorded(&x, *algo, target, seed)?;
            out.write_record(record.csv_fields())?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Summary statistics of repeated estimates.
struct Stats {
    mean: f64,
    min: f64,
    max: f64,
    std: f64,
    mean_square: f64,
}

fn stats(values: &[f64]) -> Stats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Stats {
        mean,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        std: var.sqrt(),
        mean_square: values.iter().map(|v| v * v).sum::<f64>() / n,
    }
}

#[allow(clippy::too_many_arguments)]
pub fn norm_study(
    orders: &[usize],
    widths: &[usize],
    trials: u64,
    n: usize,
    rank: usize,
    zero: bool,
    tensor_seed: u64,
    csv_path: &Path,
) -> Result<()> {
    if trials < 100 {
        bail!("--trials must be at least 100, got {trials}");
    }
    if widths.contains(&0) {
        bail!("sketch widths must be positive");
    }
    let mut out = csv::Writer::from_path(csv_path)
        .with_context(|| format!("creating {}", csv_path.display()))?;
    out.write_record([
        "d",
        "width",
        "trials",
        "true_norm",
        "mean",
        "min",
        "max",
        "std",
        "mean_square",
    ])?;
    for &d in orders {
        let x = if zero {
            TTTensor::zeros(&vec![n; d])?
        } else {
            normalized_random_tt(d, n, rank, tensor_seed)?
        };
        let truth = norm_exact(&x);
        for &w in widths {
            let estimates = (0..trials)
                .map(|t| estimate_norm_krp(&x, w, ((w as u64) << 32) ^ t))
                .collect::<Result<Vec<_>, _>>()?;
            let s = stats(&estimates);
            out.write_record([
                d.to_string(),
                w.to_string(),
                trials.to_string(),
                fmt_f64(truth),
                fmt_f64(s.mean),
                fmt_f64(s.min),
                fmt_f64(s.max),
                fmt_f64(s.std),
                fmt_f64(s.mean_square),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub struct CookieSpec {
    pub d_params: usize,
    pub grid: usize,
    pub samples: usize,
    pub rho: (f64, f64),
    pub tol: f64,
    pub round_tol: Option<f64>,
    pub max_iter: usize,
    pub seed: u64,
    pub precondition: bool,
}

#[derive(Serialize)]
struct SolveSummary {
    strategy: &'static str,
    iterations: usize,
    converged: bool,
    #[serde(serialize_with = "full_precision")]
    arnoldi_residual: f64,
    #[serde(serialize_with = "full_precision")]
    final_residual: f64,
    max_rank: usize,
    solution_ranks: Vec<usize>,
    #[serde(serialize_with = "full_precision")]
    seconds: f64,
    #[serde(serialize_with = "full_precision")]
    rounding_seconds: f64,
}

fn strategy_of(s: StrategyArg) -> (RoundingStrategy, &'static str) {
    match s {
        StrategyArg::Det => (RoundingStrategy::Deterministic, "det"),
        StrategyArg::RandOrth => (RoundingStrategy::RandOrthTT, "rand-orth"),
        StrategyArg::KrpSum => (RoundingStrategy::AdaptiveKRPSum, "krp-sum"),
    }
}

pub fn cookie(
    spec: &CookieSpec,
    strategies: &[StrategyArg],
    csv_path: Option<&Path>,
) -> Result<()> {
    let problem = build_cookie_problem(spec.d_params, spec.grid, spec.samples, spec.rho)?;
    let p_inv = if spec.precondition {
        Some(problem.mean_preconditioner()?)
    } else {
        None
    };
    let mut log = match csv_path {
        Some(p) => {
            let mut w =
                csv::Writer::from_path(p).with_context(|| format!("creating {}", p.display()))?;
            w.write_record([
                "strategy",
                "iteration",
                "relative_residual",
                "max_rank",
                "cumulative_rounding_seconds",
            ])?;
            Some(w)
        }
        None => None,
    };
    for &s in strategies {
        let (strategy, name) = strategy_of(s);
        let mut cfg = GmresConfig::new(spec.tol, spec.max_iter, strategy, spec.seed);
        cfg.round_tol = spec.round_tol;
        cfg.preconditioner = p_inv.clone();
        let start = Instant::now();
        let result = tt_gmres(&problem.operator, &problem.rhs, &cfg)?;
        let seconds = start.elapsed().as_secs_f64();
        if let Some(w) = log.as_mut() {
            for (j, ((res, rank), t)) in result
                .residual_history
                .iter()
                .zip(&result.max_rank_history)
                .zip(&result.rounding_seconds)
                .enumerate()
            {
                w.write_record([
                    name.to_string(),
                    (j + 1).to_string(),
                    fmt_f64(*res),
                    rank.to_string(),
                    fmt_f64(*t),
                ])?;
            }
        }
        let summary = SolveSummary {
            strategy: name,
            iterations: result.iterations(),
            converged: result.converged,
            arnoldi_residual: result.residual_history.last().copied().unwrap_or(0.0),
            final_residual: result.final_residual,
            max_rank: result.max_rank_history.iter().copied().max().unwrap_or(1),
            solution_ranks: result.solution.ranks(),
            seconds,
            rounding_seconds: result.rounding_seconds.last().copied().unwrap_or(0.0),
        };
        println!("{}", serde_json::to_string(&summary)?);
    }
    if let Some(mut w) = log {
        w.flush()?;
    }
    Ok(())
}
