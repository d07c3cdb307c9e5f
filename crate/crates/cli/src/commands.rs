use std::path::Path;

use cpa_auction::competition::{gamma_monte_carlo, gamma_order_stat, gamma_power_closed_form, gamma_quadrature};
use cpa_auction::hjb::{deterministic_plan, simulate_trajectories, solve, Controller, GridSpec, HjbConfig};
use cpa_auction::simulator::{run_with_blocks, MarketConfig};
use cpa_auction::strategy::{
    best_reply, expected_seller_revenue_at_equilibrium, reserve_sweep, standard_bid_slope, symmetric_equilibrium,
};
use cpa_auction::{BidStrategy, CpaProblem, Execution, PaymentRule, PriceToBeat, ValueDistribution};

use crate::config::{self, require, GammaMethod};
use crate::error::{CliError, CliResult};
use crate::output::{write_json, write_table, Format, Meta, Table};
use crate::{
    row, BestReplyArgs, Cli, Command, ControllerKind, GammaArgs, HjbCommand, HjbSimulateArgs, HjbSolveArgs, MarketArgs,
    ReserveArgs, SimulateArgs,
};

pub fn dispatch(cli: Cli) -> CliResult<()> {
    if cli.workers == Some(0) {
        return Err(CliError::config("workers", "must be at least 1"));
    }
    let exec = Execution::with_workers(cli.workers);
    match cli.command {
        Command::Gamma(a) => gamma(a, exec),
        Command::BestReply(a) => best_reply_cmd(a),
        Command::Equilibrium(a) => equilibrium(a),
        Command::Revenue(a) => revenue(a, exec),
        Command::ReserveSweep(a) => reserve(a, exec),
        Command::Simulate(a) => simulate(a, exec),
        Command::Hjb(HjbCommand::Solve(a)) => hjb_solve(a, exec),
        Command::Hjb(HjbCommand::Simulate(a)) => hjb_simulate(a, exec),
        Command::Repro(a) => crate::repro::run(a, exec),
    }
}

fn values_from(file: Option<ValueDistribution>, flags: &config::DistArgs) -> CliResult<ValueDistribution> {
    require(flags.build()?.or(file), "values")
}

fn name_kappa(e: cpa_auction::Error) -> CliError {
    match e {
        cpa_auction::Error::Unsupported(msg) => CliError::config("kappa", msg),
        e => e.into(),
    }
}

fn positive_n(n: usize, key: &str, min: usize) -> CliResult<usize> {
    if n < min {
        Err(CliError::config(key, format!("need at least {min}, got {n}")))
    } else {
        Ok(n)
    }
}

fn gamma(a: GammaArgs, exec: Execution) -> CliResult<()> {
    let file: config::GammaFile = config::load_or_default(a.config.as_deref())?;
    let cfg = config::GammaConfig {
        values: values_from(file.values, &a.dist)?,
        n: if a.n.is_empty() { require(file.n, "n")? } else { a.n },
        method: a.method.or(file.method).unwrap_or(GammaMethod::ClosedForm),
        samples: a.samples.or(file.samples).unwrap_or(1_000_000),
        seed: a.seed.or(file.seed).unwrap_or(0),
    };
    if cfg.n.is_empty() {
        return Err(CliError::config("n", "need at least one bidder count"));
    }
    for &n in &cfg.n {
        positive_n(n, "n", 2)?;
    }
    let seed = (cfg.method == GammaMethod::MonteCarlo).then_some(cfg.seed);
    let meta = Meta::new("gamma", &cfg, seed)?;
    meta.echo();

    let d = cfg.values;
    let mut table = Table::new(&["family", "param", "n", "method", "gamma", "std_error"]);
    for &n in &cfg.n {
        let r = match cfg.method {
            GammaMethod::ClosedForm => match d {
                ValueDistribution::Power { a } => {
                    let mut r = gamma_order_stat(&d, n)?;
                    r.gamma = gamma_power_closed_form(a, n)?;
                    r
                }
                _ => gamma_order_stat(&d, n)?,
            },
            GammaMethod::Quadrature => gamma_quadrature(&d, n)?,
            GammaMethod::MonteCarlo => gamma_monte_carlo(&d, n, cfg.samples, cfg.seed, exec)?,
        };
        let method = match cfg.method {
            GammaMethod::ClosedForm => "closed-form",
            GammaMethod::Quadrature => "quadrature",
            GammaMethod::MonteCarlo => "monte-carlo",
        };
        table.push(row![d.family(), d.primary_param(), n, method, r.gamma, r.std_error]);
    }
    write_table(a.out.out.as_deref(), a.out.format, &meta, &table)
}

fn best_reply_cmd(a: BestReplyArgs) -> CliResult<()> {
    let file: config::BestReplyFile = config::load_or_default(a.config.as_deref())?;
    let values = values_from(file.values, &a.dist)?;
    let price_to_beat = match a.opponents {
        Some(k) => PriceToBeat::derived(k, values, BidStrategy::linear(a.opponent_slope)?),
        None => require(file.price_to_beat, "price_to_beat")?,
    };
    let cfg = config::BestReplyConfig {
        values,
        price_to_beat,
        target_cpa: require(a.target_cpa.or(file.target_cpa), "target_cpa")?,
    };
    let meta = Meta::new("best-reply", &cfg, None)?;
    meta.echo();
    let r = best_reply(&CpaProblem::new(cfg.values, cfg.price_to_beat, cfg.target_cpa)?)?;
    let mut table = Table::new(&[
        "alpha_star",
        "lagrange_lambda",
        "binding",
        "achieved_cpa",
        "expected_value",
        "alpha_cap",
        "iterations",
    ]);
    table.push(row![
        r.alpha_star,
        r.lagrange_lambda,
        r.binding,
        r.achieved_cpa,
        r.expected_value,
        r.alpha_cap,
        r.iterations
    ]);
    write_table(a.out.out.as_deref(), a.out.format, &meta, &table)
}

fn market_file(a: &MarketArgs) -> CliResult<(config::MarketFile, ValueDistribution, usize, f64, f64)> {
    let file: config::MarketFile = config::load_or_default(a.config.as_deref())?;
    let values = values_from(file.values, &a.dist)?;
    let n = positive_n(require(a.n.or(file.n), "n")?, "n", 2)?;
    let target = require(a.target_cpa.or(file.target_cpa), "target_cpa")?;
    let kappa = a.kappa.or(file.kappa).unwrap_or(1.0);
    Ok((file, values, n, target, kappa))
}

fn equilibrium(a: MarketArgs) -> CliResult<()> {
    let (_, values, n, target_cpa, kappa) = market_file(&a)?;
    let cfg = config::EquilibriumConfig {
        values,
        n,
        target_cpa,
        kappa,
    };
    let meta = Meta::new("equilibrium", &cfg, None)?;
    meta.echo();
    let rule = PaymentRule::new(kappa, 0.0)?;
    let eq = symmetric_equilibrium(&values, n, target_cpa, &rule).map_err(name_kappa)?;
    let g = gamma_order_stat(&values, n)?.gamma;
    let hat = standard_bid_slope(&values, n, kappa).map_err(name_kappa)?;
    let mut table = Table::new(&[
        "family",
        "param",
        "n",
        "target_cpa",
        "kappa",
        "gamma",
        "standard_slope",
        "slope",
    ]);
    table.push(row![
        values.family(),
        values.primary_param(),
        n,
        target_cpa,
        kappa,
        g,
        hat,
        eq.slope
    ]);
    write_table(a.out.out.as_deref(), a.out.format, &meta, &table)
}

fn revenue(a: MarketArgs, exec: Execution) -> CliResult<()> {
    let (file, values, n, target_cpa, kappa) = market_file(&a)?;
    let cfg = config::RevenueConfig {
        values,
        n,
        target_cpa,
        kappa,
        auctions: a.auctions.or(file.auctions).unwrap_or(0),
        seed: a.seed.or(file.seed).unwrap_or(0),
    };
    let seed = (cfg.auctions > 0).then_some(cfg.seed);
    let meta = Meta::new("revenue", &cfg, seed)?;
    meta.echo();
    let analytic = expected_seller_revenue_at_equilibrium(&values, n, target_cpa)?;
    let (sim, se) = if cfg.auctions > 0 {
        let rule = PaymentRule::new(kappa, 0.0)?;
        let eq = symmetric_equilibrium(&values, n, target_cpa, &rule).map_err(name_kappa)?;
        let market = MarketConfig::symmetric(values, n, target_cpa, eq, rule, cfg.auctions, cfg.seed);
        let (rep, _) = run_with_blocks(&market, exec)?;
        (rep.seller_revenue_mean, rep.seller_revenue_se)
    } else {
        (f64::NAN, f64::NAN)
    };
    let mut table = Table::new(&[
        "family",
        "param",
        "n",
        "target_cpa",
        "kappa",
        "analytic_revenue",
        "simulated_revenue",
        "simulated_se",
    ]);
    table.push(row![
        values.family(),
        values.primary_param(),
        n,
        target_cpa,
        kappa,
        analytic,
        sim,
        se
    ]);
    write_table(a.out.out.as_deref(), a.out.format, &meta, &table)
}

fn parse_grid(s: &str) -> CliResult<GridSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::config("multipliers", format!("expected `min:max:steps`, got `{s}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let min = parts[0].parse().map_err(|_| bad())?;
    let max = parts[1].parse().map_err(|_| bad())?;
    let steps = parts[2].parse().map_err(|_| bad())?;
    Ok(GridSpec::new(min, max, steps))
}

fn reserve(a: ReserveArgs, exec: Execution) -> CliResult<()> {
    let file: config::ReserveSweepFile = config::load_or_default(a.market.config.as_deref())?;
    let m = &a.market;
    let multipliers = match &a.multipliers {
        Some(s) => parse_grid(s)?,
        None => file.multipliers.unwrap_or(GridSpec::new(0.5, 1.5, 40)),
    };
    if multipliers.steps == 0 || multipliers.max.partial_cmp(&multipliers.min) != Some(std::cmp::Ordering::Greater) {
        return Err(CliError::config("multipliers", "need min < max and at least one step"));
    }
    let cfg = config::ReserveSweepConfig {
        values: values_from(file.values, &m.dist)?,
        n: positive_n(require(m.n.or(file.n), "n")?, "n", 1)?,
        target_cpa: require(m.target_cpa.or(file.target_cpa), "target_cpa")?,
        kappa: m.kappa.or(file.kappa).unwrap_or(1.0),
        reserves: if a.reserves.is_empty() {
            file.reserves.unwrap_or_else(|| vec![0.0])
        } else {
            a.reserves
        },
        multipliers,
        auctions: m.auctions.or(file.auctions).unwrap_or(1_000_000),
        seed: m.seed.or(file.seed).unwrap_or(0),
    };
    let meta = Meta::new("reserve-sweep", &cfg, Some(cfg.seed))?;
    meta.echo();
    let (rows, equilibria) = reserve_tables(&cfg, exec)?;
    write_table(m.out.out.as_deref(), m.out.format, &meta, &rows)?;
    if let Some(p) = &a.equilibria_out {
        write_table(Some(p), m.out.format, &meta, &equilibria)?;
    }
    Ok(())
}

pub fn reserve_tables(cfg: &config::ReserveSweepConfig, exec: Execution) -> CliResult<(Table, Table)> {
    let sweep_cfg = cpa_auction::strategy::ReserveSweepConfig {
        dist: cfg.values,
        bidders: cfg.n,
        target_cpa: cfg.target_cpa,
        kappa: cfg.kappa,
        auctions: cfg.auctions,
        seed: cfg.seed,
    };
    let sweep = reserve_sweep(&sweep_cfg, &cfg.reserves, &cfg.multipliers.points(), exec)?;
    let mut rows = Table::new(&[
        "reserve",
        "multiplier",
        "payment",
        "payment_se",
        "value",
        "value_se",
        "value_minus_payment",
        "cpa",
        "feasible",
    ]);
    for r in &sweep.rows {
        rows.push(row![
            r.reserve,
            r.multiplier,
            r.payment,
            r.payment_se,
            r.value,
            r.value_se,
            r.value_minus_payment,
            r.cpa,
            r.feasible
        ]);
    }
    let mut eq = Table::new(&[
        "reserve",
        "multiplier",
        "seller_revenue",
        "seller_revenue_se",
        "bracketed",
    ]);
    for e in &sweep.equilibria {
        eq.push(row![
            e.reserve,
            e.multiplier,
            e.seller_revenue,
            e.seller_revenue_se,
            e.bracketed
        ]);
    }
    Ok((rows, eq))
}

fn simulate(a: SimulateArgs, exec: Execution) -> CliResult<()> {
    let mut cfg: MarketConfig = config::load(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(n) = a.auctions {
        cfg.auctions = n;
    }
    cfg.validate()?;
    let meta = Meta::new("simulate", &cfg, Some(cfg.seed))?;
    meta.echo();
    let (report, blocks) = run_with_blocks(&cfg, exec)?;
    write_json(a.out.as_deref(), &meta, "report", &report)?;
    if let Some(p) = &a.block_csv {
        let mut t = Table::new(&["block", "auctions", "sales", "revenue", "welfare"]);
        for b in blocks {
            t.push(row![b.block, b.auctions, b.sales, b.revenue, b.welfare]);
        }
        write_table(Some(p), Format::Csv, &meta, &t)?;
    }
    Ok(())
}

fn hjb_config(path: Option<&Path>) -> CliResult<HjbConfig> {
    let file: config::HjbFile = config::load_or_default(path)?;
    let cfg = file.resolve();
    cfg.validate()?;
    if let Err(cpa_auction::Error::Cfl {
        dt,
        dt_max,
        suggested_t_steps,
    }) = cfg.check_cfl()
    {
        return Err(CliError::config(
            "t_steps",
            format!("dt = {dt:.3e} exceeds the stable {dt_max:.3e}; use at least {suggested_t_steps}"),
        ));
    }
    Ok(cfg)
}

fn hjb_solve(a: HjbSolveArgs, exec: Execution) -> CliResult<()> {
    if a.every == 0 {
        return Err(CliError::config("every", "must be at least 1"));
    }
    let cfg = hjb_config(a.config.as_deref())?;
    let meta = Meta::new("hjb solve", &cfg, None)?;
    meta.echo();
    let sol = solve(&cfg, exec)?;
    if a.out.format == Format::Json {
        return write_json(a.out.out.as_deref(), &meta, "solution", &sol);
    }
    let mut table = Table::new(&["t_index", "t", "x", "value", "alpha"]);
    let nt = sol.t_steps();
    for n in (0..=nt).filter(|n| n % a.every == 0 || *n == nt) {
        for (i, &x) in sol.x.iter().enumerate() {
            let alpha = if n < nt { sol.policy_at(n, i) } else { f64::NAN };
            table.push(row![n, sol.t[n], x, sol.value_at(n, i), alpha]);
        }
    }
    write_table(a.out.out.as_deref(), a.out.format, &meta, &table)
}

#[derive(serde::Serialize)]
struct HjbSimulateConfig {
    hjb: HjbConfig,
    x0: f64,
    paths: u64,
    seed: u64,
    controller: &'static str,
    alpha: Option<f64>,
}

pub fn trajectory_table() -> Table {
    Table::new(&[
        "controller",
        "path",
        "t",
        "x",
        "alpha",
        "cumulative_value",
        "cumulative_cost",
        "realized_value",
        "empirical_cpa",
    ])
}

pub fn push_trajectories(table: &mut Table, label: &str, recs: &[cpa_auction::hjb::TrajectoryRecord]) {
    for r in recs {
        for p in &r.points {
            table.push(row![
                label,
                r.path,
                p.t,
                p.x,
                p.alpha,
                p.cumulative_value,
                p.cumulative_cost,
                p.realized_value,
                p.empirical_cpa
            ]);
        }
    }
}

fn hjb_simulate(a: HjbSimulateArgs, exec: Execution) -> CliResult<()> {
    let hjb = hjb_config(a.config.as_deref())?;
    let alpha = match a.controller {
        ControllerKind::Constant => Some(require(a.alpha, "alpha")?),
        ControllerKind::Plan => Some(
            deterministic_plan(&hjb, a.x0)?
                .alpha
                .ok_or_else(|| CliError::config("horizon", "zero horizon leaves nothing to simulate"))?,
        ),
        ControllerKind::Hjb => None,
    };
    let label = match a.controller {
        ControllerKind::Hjb => "hjb",
        ControllerKind::Plan => "plan",
        ControllerKind::Constant => "constant",
    };
    let cfg = HjbSimulateConfig {
        hjb,
        x0: a.x0,
        paths: a.paths,
        seed: a.seed,
        controller: label,
        alpha,
    };
    let meta = Meta::new("hjb simulate", &cfg, Some(a.seed))?;
    meta.echo();
    let sol;
    let controller = match alpha {
        Some(al) => Controller::Constant(al),
        None => {
            sol = solve(&hjb, exec)?;
            Controller::Policy(&sol)
        }
    };
    let recs = simulate_trajectories(&hjb, controller, a.x0, a.paths, a.seed, true, exec)?;
    let violations = recs.iter().filter(|r| !r.feasible).count();
    let exits: usize = recs.iter().map(|r| r.grid_exits).sum();
    eprintln!(
        "# {} of {} paths end below zero slack; {exits} off-grid policy lookups",
        violations,
        recs.len()
    );
    let mut table = trajectory_table();
    push_trajectories(&mut table, label, &recs);
    write_table(a.out.out.as_deref(), a.out.format, &meta, &table)
}
