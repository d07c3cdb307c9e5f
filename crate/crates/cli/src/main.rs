//! `cpa-auction`: command-line front end to the CPA auction library.
//!
//! Exit status is 0 on success, 2 for configuration errors and 1 for
//! numerical or i/o failures.

mod commands;
mod config;
mod error;
mod output;
mod repro;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_count, DistArgs, GammaMethod};
use output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "cpa-auction",
    version,
    about = "CPA-constrained auctions: equilibria, simulation and dynamic bidding"
)]
struct Cli {
    /// Worker threads for Monte Carlo work; defaults to all cores. Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Competition factor for each bidder count.
    Gamma(GammaArgs),
    /// Optimal multiplier of one bidder against a price-to-beat law.
    BestReply(BestReplyArgs),
    /// Symmetric equilibrium multiplier.
    Equilibrium(MarketArgs),
    /// Seller revenue at the symmetric equilibrium, optionally simulated.
    Revenue(MarketArgs),
    /// Symmetric profiles over reserve and multiplier grids.
    ReserveSweep(ReserveArgs),
    /// Runs a market described by a config file and prints a JSON report.
    Simulate(SimulateArgs),
    /// Dynamic bidder on the CPA slack.
    #[command(subcommand)]
    Hjb(HjbCommand),
    /// Canned experiments.
    Repro(ReproArgs),
}

#[derive(Debug, Args)]
struct GammaArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    dist: DistArgs,
    /// Bidder counts, e.g. `2,3,5`.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_enum)]
    method: Option<GammaMethod>,
    #[arg(long, value_parser = parse_count)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct BestReplyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    dist: DistArgs,
    #[arg(long)]
    target_cpa: Option<f64>,
    /// Opponents drawing from the same law and bidding `opponent-slope · v`.
    #[arg(long)]
    opponents: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    opponent_slope: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct MarketArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    dist: DistArgs,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    target_cpa: Option<f64>,
    /// Payment rule weight: 1 is second price, 0 first price.
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, value_parser = parse_count)]
    auctions: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct ReserveArgs {
    #[command(flatten)]
    market: MarketArgs,
    /// Reserve prices, e.g. `0,0.1,0.2`.
    #[arg(long, value_delimiter = ',')]
    reserves: Vec<f64>,
    /// Multiplier grid as `min:max:steps`.
    #[arg(long)]
    multipliers: Option<String>,
    /// Also write the per-reserve equilibria here.
    #[arg(long)]
    equilibria_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_count)]
    auctions: Option<u64>,
    /// JSON report; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-block summaries as CSV.
    #[arg(long)]
    block_csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum HjbCommand {
    /// Value function and policy on the grid.
    Solve(HjbSolveArgs),
    /// Slack trajectories under the HJB policy, the deterministic plan or a constant multiplier.
    Simulate(HjbSimulateArgs),
}

#[derive(Debug, Args)]
struct HjbSolveArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Keep every k-th time slice.
    #[arg(long, default_value_t = 1)]
    every: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ControllerKind {
    Hjb,
    Plan,
    Constant,
}

#[derive(Debug, Args)]
struct HjbSimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    x0: f64,
    #[arg(long, value_parser = parse_count, default_value = "100")]
    paths: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "hjb")]
    controller: ControllerKind,
    /// Multiplier for `--controller constant`.
    #[arg(long)]
    alpha: Option<f64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Experiment {
    /// Reserve sweep with equilibrium revenue per reserve.
    #[value(name = "fig1")]
    ReserveRevenue,
    /// Value and cost rate curves.
    #[value(name = "fig2")]
    RateCurves,
    /// HJB policy and paired trajectories against the constant plan.
    #[value(name = "fig3")]
    Trajectories,
    /// Competition factor across families and parameters.
    #[value(name = "fig4")]
    GammaGrid,
    /// Affine deviation against the symmetric linear equilibrium.
    #[value(name = "sec4-affine")]
    AffineDeviation,
    /// Asymmetric equilibrium with one bidder priced out.
    #[value(name = "sec4-asymmetric")]
    Asymmetric,
}

#[derive(Debug, Args)]
struct ReproArgs {
    #[arg(value_enum)]
    experiment: Experiment,
    #[arg(long, value_parser = parse_count)]
    auctions: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Trajectories per controller (fig3).
    #[arg(long, value_parser = parse_count)]
    paths: Option<u64>,
    #[arg(long, default_value = "repro-out")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
