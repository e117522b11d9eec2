//! `ttkrp`: round TT files, run the synthetic and norm-estimation studies,
//! and compare rounding strategies inside TT-GMRES.

mod algorithms;
mod commands;
mod record;

use std::path::PathBuf;

use anyhow::Result;
use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use algorithms::Algo;

#[derive(Debug, Parser)]
#[command(
    name = "ttkrp",
    version,
    about = "Tensor-train rounding with Khatri-Rao sketches"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Round a TTF1 file and print a JSON record.
    #[command(group(ArgGroup::new("target").required(true).args(["ranks", "tol"])))]
    Round {
        input: PathBuf,
        output: PathBuf,
        /// Target ranks l_1,...,l_{d-1}.
        #[arg(long, value_delimiter = ',')]
        ranks: Option<Vec<usize>>,
        /// Relative tolerance.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value = "det")]
        algo: Algo,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Rounding sweep over perturbed low-rank tensors X = Y + eps Z.
    #[command(group(ArgGroup::new("sweep").required(true).args(["targets", "tols"])))]
    BenchSynthetic {
        #[arg(long, default_value_t = 5)]
        d: usize,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        rank: usize,
        #[arg(long, default_value_t = 1e-5)]
        eps_pert: f64,
        /// Uniform target ranks to sweep.
        #[arg(long, value_delimiter = ',')]
        targets: Option<Vec<usize>>,
        /// Relative tolerances to sweep.
        #[arg(long, value_delimiter = ',')]
        tols: Option<Vec<f64>>,
        /// Number of sketch seeds per cell (seeds 0..k).
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        /// Seed of the generated tensor.
        #[arg(long, default_value_t = 0)]
        tensor_seed: u64,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Statistics of the KRP norm estimator over repeated sketches.
    NormStudy {
        #[arg(long, value_delimiter = ',', default_value = "3,4,5")]
        d: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "8,32,128")]
        widths: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        rank: usize,
        /// Study the all-zero tensor instead of a random one.
        #[arg(long)]
        zero: bool,
        #[arg(long, default_value_t = 0)]
        tensor_seed: u64,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Solve the cookie problem with TT-GMRES under each rounding strategy.
    Cookie {
        /// Number of Kronecker terms (spatial mode + one mode per disc).
        #[arg(long, default_value_t = 4)]
        d_params: usize,
        #[arg(long, default_value_t = 16)]
        grid: usize,
        #[arg(long, default_value_t = 8)]
        samples: usize,
        #[arg(long, default_value_t = 1.0)]
        rho_min: f64,
        #[arg(long, default_value_t = 10.0)]
        rho_max: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Per-rounding relative tolerance (default 0.1 * tol).
        #[arg(long)]
        round_tol: Option<f64>,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "det,krp-sum")]
        strategy: Vec<StrategyArg>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Disable the mean-parameter preconditioner.
        #[arg(long)]
        no_precond: bool,
        /// Iteration log (strategy, iteration, residual, max rank, rounding time).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Det,
    RandOrth,
    KrpSum,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Round {
            input,
            output,
            ranks,
            tol,
            algo,
            seed,
        } => commands::round(&input, &output, ranks, tol, algo, seed),
        Command::BenchSynthetic {
            d,
            n,
            rank,
            eps_pert,
            targets,
            tols,
            seeds,
            tensor_seed,
            csv,
        } => commands::bench_synthetic(
            &commands::SyntheticSpec {
                d,
                n,
                rank,
                eps_pert,
                tensor_seed,
            },
            targets,
            tols,
            seeds,
            &csv,
        ),
        Command::NormStudy {
            d,
            widths,
            trials,
            n,
            rank,
            zero,
            tensor_seed,
            csv,
        } => commands::norm_study(&d, &widths, trials, n, rank, zero, tensor_seed, &csv),
        Command::Cookie {
            d_params,
            grid,
            samples,
            rho_min,
            rho_max,
            tol,
            round_tol,
            max_iter,
            strategy,
            seed,
            no_precond,
            csv,
        } => commands::cookie(
            &commands::CookieSpec {
                d_params,
                grid,
                samples,
                rho: (rho_min, rho_max),
                tol,
                round_tol,
                max_iter,
                seed,
                precondition: !no_precond,
            },
            &strategy,
            csv.as_deref(),
        ),
    }
}
