//! Canned experiments. Each writes its tables as `<name>.csv` (or `.json`)
//! under the output directory.

use std::path::PathBuf;

use cpa_auction::competition::gamma_sweep;
use cpa_auction::competition::SweepMethod;
use cpa_auction::hjb::{self, deterministic_plan, simulate_trajectories, solve, Controller, GridSpec, HjbConfig};
use cpa_auction::simulator::{self, check_asymmetric_equilibrium};
use cpa_auction::{BidStrategy, BidderSpec, Execution, MarketConfig, PaymentRule, ValueDistribution};
use serde::Serialize;

use crate::commands::{push_trajectories, reserve_tables, trajectory_table};
use crate::config::ReserveSweepConfig;
use crate::error::CliResult;
use crate::output::{write_table, Format, Meta, Table};
use crate::{row, Experiment, ReproArgs};

struct Sink {
    dir: PathBuf,
    format: Format,
}

impl Sink {
    fn write(&self, name: &str, meta: &Meta, table: &Table) -> CliResult<()> {
        let ext = match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        let path = self.dir.join(format!("{name}.{ext}"));
        write_table(Some(&path), self.format, meta, table)?;
        println!("{}", path.display());
        Ok(())
    }
}

pub fn run(a: ReproArgs, exec: Execution) -> CliResult<()> {
    let sink = Sink {
        dir: a.out_dir.clone(),
        format: a.format,
    };
    match a.experiment {
        Experiment::ReserveRevenue => reserve_revenue(&a, &sink, exec),
        Experiment::RateCurves => rate_curves(&sink),
        Experiment::Trajectories => trajectories(&a, &sink, exec),
        Experiment::GammaGrid => gamma_grid(&sink, exec),
        Experiment::AffineDeviation => affine(&a, &sink, exec),
        Experiment::Asymmetric => asymmetric(&a, &sink, exec),
    }
}

fn reserve_revenue(a: &ReproArgs, sink: &Sink, exec: Execution) -> CliResult<()> {
    let cfg = ReserveSweepConfig {
        values: ValueDistribution::uniform(0.0, 1.0)?,
        n: 2,
        target_cpa: 0.4,
        kappa: 1.0,
        reserves: vec![0.0, 0.1, 0.2, 0.3],
        multipliers: GridSpec::new(0.5, 1.5, 40),
        auctions: a.auctions.unwrap_or(1_000_000),
        seed: a.seed.unwrap_or(13),
    };
    let meta = Meta::new("repro fig1", &cfg, Some(cfg.seed))?;
    meta.echo();
    let (rows, eq) = reserve_tables(&cfg, exec)?;
    sink.write("fig1", &meta, &rows)?;
    sink.write("fig1-equilibria", &meta, &eq)
}

#[derive(Serialize)]
struct RatesConfig {
    exponents: Vec<f64>,
    alpha: GridSpec,
}

fn rate_curves(sink: &Sink) -> CliResult<()> {
    let cfg = RatesConfig {
        exponents: vec![1.0, 3.0],
        alpha: GridSpec::new(0.0, 5.0, 100),
    };
    let meta = Meta::new("repro fig2", &cfg, None)?;
    meta.echo();
    let mut t = Table::new(&["a", "alpha", "value_rate", "cost_rate", "cpa"]);
    for &a in &cfg.exponents {
        for alpha in cfg.alpha.points() {
            let (r, c) = hjb::rates(a, alpha)?;
            let cpa = if r > 0.0 { c / r } else { 0.0 };
            t.push(row![a, alpha, r, c, cpa]);
        }
    }
    sink.write("fig2", &meta, &t)
}

#[derive(Serialize)]
struct TrajectoryConfig {
    hjb: HjbConfig,
    x0: f64,
    paths: u64,
    seed: u64,
}

fn trajectories(a: &ReproArgs, sink: &Sink, exec: Execution) -> CliResult<()> {
    let cfg = TrajectoryConfig {
        hjb: HjbConfig::default(),
        x0: 0.0,
        paths: a.paths.unwrap_or(20),
        seed: a.seed.unwrap_or(3),
    };
    let meta = Meta::new("repro fig3", &cfg, Some(cfg.seed))?;
    meta.echo();
    let sol = solve(&cfg.hjb, exec)?;
    let mut policy = Table::new(&["t_index", "t", "x", "alpha"]);
    let every = (sol.t_steps() / 50).max(1);
    for n in (0..sol.t_steps()).step_by(every) {
        for (i, &x) in sol.x.iter().enumerate() {
            policy.push(row![n, sol.t[n], x, sol.policy_at(n, i)]);
        }
    }
    sink.write("fig3-policy", &meta, &policy)?;

    let plan = deterministic_plan(&cfg.hjb, cfg.x0)?.alpha.unwrap_or(0.0);
    let mut paths = trajectory_table();
    for (label, controller) in [("hjb", Controller::Policy(&sol)), ("plan", Controller::Constant(plan))] {
        let recs = simulate_trajectories(&cfg.hjb, controller, cfg.x0, cfg.paths, cfg.seed, true, exec)?;
        let violations = recs.iter().filter(|r| !r.feasible).count();
        eprintln!("# {label}: {violations} of {} paths end below zero slack", recs.len());
        push_trajectories(&mut paths, label, &recs);
    }
    sink.write("fig3-trajectories", &meta, &paths)
}

#[derive(Serialize)]
struct SweepConfig {
    power_a: Vec<f64>,
    exponential_rate: Vec<f64>,
    log_normal_sigma: Vec<f64>,
    n: Vec<usize>,
}

fn gamma_grid(sink: &Sink, exec: Execution) -> CliResult<()> {
    let cfg = SweepConfig {
        power_a: vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
        exponential_rate: vec![1.0, 5.0],
        log_normal_sigma: vec![0.25, 0.5, 1.0, 1.5, 2.0],
        n: vec![2, 3, 5, 10],
    };
    let meta = Meta::new("repro fig4", &cfg, None)?;
    meta.echo();
    let mut dists = Vec::new();
    for &a in &cfg.power_a {
        dists.push(ValueDistribution::power(a)?);
    }
    for &r in &cfg.exponential_rate {
        dists.push(ValueDistribution::exponential(r)?);
    }
    for &s in &cfg.log_normal_sigma {
        dists.push(ValueDistribution::log_normal(0.0, s)?);
    }
    let mut t = Table::new(&["family", "param", "n", "method", "gamma", "std_error"]);
    for r in gamma_sweep(&dists, &cfg.n, SweepMethod::Analytic, exec)? {
        match r.result {
            Ok(g) => t.push(row![r.family, r.param, r.n, g.method.as_str(), g.gamma, g.std_error]),
            Err(e) => {
                eprintln!("# {} {} n={}: {e}", r.family, r.param, r.n);
                t.push(row![r.family, r.param, r.n, "failed", f64::NAN, f64::NAN]);
            }
        }
    }
    sink.write("fig4", &meta, &t)
}

#[derive(Serialize)]
struct AffineConfig {
    values: ValueDistribution,
    target_cpa: f64,
    profiles: Vec<(String, [BidStrategy; 2])>,
    auctions: u64,
    seed: u64,
}

fn affine(a: &ReproArgs, sink: &Sink, exec: Execution) -> CliResult<()> {
    let cfg = AffineConfig {
        values: ValueDistribution::exponential(1.0)?,
        target_cpa: 1.0,
        profiles: vec![
            (
                "deviation".into(),
                [BidStrategy::affine(2.0, 1.0)?, BidStrategy::linear(2.0)?],
            ),
            (
                "equilibrium".into(),
                [BidStrategy::linear(3.0)?, BidStrategy::linear(3.0)?],
            ),
        ],
        auctions: a.auctions.unwrap_or(10_000_000),
        seed: a.seed.unwrap_or(7),
    };
    let meta = Meta::new("repro sec4-affine", &cfg, Some(cfg.seed))?;
    meta.echo();
    let mut t = Table::new(&[
        "profile",
        "bidder",
        "slope",
        "intercept",
        "empirical_cpa",
        "empirical_cpa_se",
        "mean_value",
        "mean_value_se",
    ]);
    for (name, strategies) in &cfg.profiles {
        let market = MarketConfig {
            bidders: strategies
                .iter()
                .map(|&strategy| BidderSpec {
                    value_dist: cfg.values,
                    target_cpa: cfg.target_cpa,
                    strategy,
                })
                .collect(),
            rule: PaymentRule::second_price(),
            auctions: cfg.auctions,
            seed: cfg.seed,
        };
        let rep = simulator::run(&market, exec)?;
        for (i, (b, s)) in rep.bidders.iter().zip(strategies).enumerate() {
            t.push(row![
                name.as_str(),
                i + 1,
                s.slope,
                s.intercept,
                b.empirical_cpa,
                b.empirical_cpa_se,
                b.mean_value,
                b.mean_value_se
            ]);
        }
    }
    sink.write("sec4-affine", &meta, &t)
}

#[derive(Serialize)]
struct AsymmetricConfig {
    deviation_grid: Vec<f64>,
    auctions: u64,
    seed: u64,
}

fn asymmetric(a: &ReproArgs, sink: &Sink, exec: Execution) -> CliResult<()> {
    let mut grid: Vec<f64> = (0..=16).map(|k| 0.5 * k as f64).collect();
    grid.push(4.0 - 1e-9);
    grid.sort_by(f64::total_cmp);
    let cfg = AsymmetricConfig {
        deviation_grid: grid,
        auctions: a.auctions.unwrap_or(1_000_000),
        seed: a.seed.unwrap_or(4),
    };
    let meta = Meta::new("repro sec4-asymmetric", &cfg, Some(cfg.seed))?;
    meta.echo();
    let rep = check_asymmetric_equilibrium(&cfg.deviation_grid, cfg.auctions, cfg.seed, exec)?;
    eprintln!(
        "# opponent CPA at zero: {} (feasible: {}); equilibrium holds: {}",
        rep.opponent_cpa_at_zero, rep.opponent_feasible_at_zero, rep.equilibrium_holds
    );
    let mut t = Table::new(&[
        "multiplier",
        "wins",
        "empirical_cpa",
        "empirical_cpa_se",
        "mean_value",
        "mean_value_se",
        "feasible",
    ]);
    for d in &rep.deviations {
        t.push(row![
            d.multiplier,
            d.wins,
            d.empirical_cpa,
            d.empirical_cpa_se,
            d.mean_value,
            d.mean_value_se,
            d.feasible
        ]);
    }
    sink.write("sec4-asymmetric", &meta, &t)
}
