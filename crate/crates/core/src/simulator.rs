//! Seeded Monte Carlo engine for repeated one-shot auctions.
//!
//! Each auction draws one value per bidder (in bidder order), applies the
//! bidders' strategies, allocates to the highest bid at or above the reserve
//! (lowest index wins ties) and charges `S(winning bid, max(runner-up, reserve))`.
//!
//! Auctions are processed in blocks of [`DEFAULT_BLOCK_LEN`]; block `i` uses
//! random stream `i`, and block results are merged in order with compensated
//! sums. Reports are therefore bit-identical for a given seed whatever the
//! executor or worker count.

use serde::{Deserialize, Serialize};

use crate::distributions::ValueDistribution;
use crate::error::{Error, Result};
use crate::exec::{block_plan, ratio_std_error, rng_stream, CompensatedSum, Execution, Moments, DEFAULT_BLOCK_LEN};
use crate::strategy::{BidStrategy, PaymentRule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BidderSpec {
    pub value_dist: ValueDistribution,
    pub target_cpa: f64,
    pub strategy: BidStrategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub bidders: Vec<BidderSpec>,
    #[serde(default)]
    pub rule: PaymentRule,
    pub auctions: u64,
    #[serde(default)]
    pub seed: u64,
}

impl MarketConfig {
    /// `n` identical bidders.
    pub fn symmetric(
        value_dist: ValueDistribution,
        n: usize,
        target_cpa: f64,
        strategy: BidStrategy,
        rule: PaymentRule,
        auctions: u64,
        seed: u64,
    ) -> Self {
        MarketConfig {
            bidders: vec![
                BidderSpec {
                    value_dist,
                    target_cpa,
                    strategy,
                };
                n
            ],
            rule,
            auctions,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bidders.is_empty() {
            return Err(Error::invalid("bidders", "need at least one bidder"));
        }
        if self.auctions == 0 {
            return Err(Error::invalid("auctions", "need at least one auction"));
        }
        self.rule.validate()?;
        for b in &self.bidders {
            b.value_dist.validate()?;
            b.strategy.validate()?;
            if !(b.target_cpa > 0.0 && b.target_cpa.is_finite()) {
                return Err(Error::invalid(
                    "target_cpa",
                    format!("must be finite and > 0, got {}", b.target_cpa),
                ));
            }
        }
        Ok(())
    }
}

/// Winner index and payment, or `None` when no bid reaches the reserve.
#[inline]
pub fn resolve_auction(bids: &[f64], rule: &PaymentRule) -> Option<(usize, f64)> {
    let mut best = 0;
    for (i, &b) in bids.iter().enumerate().skip(1) {
        if b > bids[best] {
            best = i;
        }
    }
    let top = *bids.get(best)?;
    if top < rule.reserve {
        return None;
    }
    let second = bids
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, &b)| b)
        .fold(0.0, f64::max);
    Some((best, rule.charge(top, second)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BidderReport {
    pub wins: u64,
    /// Sum of values over won auctions.
    pub value_won: f64,
    /// Sum of payments.
    pub cost: f64,
    /// `cost / value_won`; zero when nothing was won.
    pub empirical_cpa: f64,
    pub empirical_cpa_se: f64,
    /// Per-auction mean of `(v − payment)` on wins.
    pub profit_in_value: f64,
    pub mean_value: f64,
    pub mean_value_se: f64,
    pub mean_cost: f64,
    pub mean_cost_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub auctions: u64,
    pub sales: u64,
    pub bidders: Vec<BidderReport>,
    /// Sum of the bidders' `cost` totals.
    pub seller_revenue: f64,
    /// Sum of the bidders' `value_won` totals.
    pub welfare: f64,
    pub seller_revenue_mean: f64,
    pub seller_revenue_se: f64,
    pub welfare_mean: f64,
    pub welfare_se: f64,
    /// Seller revenue over welfare, zero without sales.
    pub market_cpa: f64,
    pub market_cpa_se: f64,
}

/// Per-block aggregates, for block-level diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockSummary {
    pub block: u64,
    pub auctions: u64,
    pub sales: u64,
    pub revenue: f64,
    pub welfare: f64,
}

#[derive(Debug, Clone, Default)]
struct BidderAcc {
    wins: u64,
    value: Moments,
    cost: Moments,
    value_cost: CompensatedSum,
}

#[derive(Debug, Clone, Default)]
struct BlockAcc {
    auctions: u64,
    sales: u64,
    bidders: Vec<BidderAcc>,
    revenue: Moments,
    welfare: Moments,
    revenue_welfare: CompensatedSum,
}

impl BlockAcc {
    fn new(n: usize) -> Self {
        BlockAcc {
            bidders: vec![BidderAcc::default(); n],
            ..Default::default()
        }
    }

    fn merge(&mut self, other: &BlockAcc) {
        self.auctions += other.auctions;
        self.sales += other.sales;
        for (a, b) in self.bidders.iter_mut().zip(&other.bidders) {
            a.wins += b.wins;
            a.value.merge(&b.value);
            a.cost.merge(&b.cost);
            a.value_cost.merge(&b.value_cost);
        }
        self.revenue.merge(&other.revenue);
        self.welfare.merge(&other.welfare);
        self.revenue_welfare.merge(&other.revenue_welfare);
    }
}

fn simulate_block(config: &MarketConfig, block: u64, len: u64) -> BlockAcc {
    let n = config.bidders.len();
    let mut rng = rng_stream(config.seed, block);
    let mut acc = BlockAcc::new(n);
    let mut values = vec![0.0; n];
    let mut bids = vec![0.0; n];
    for _ in 0..len {
        for (i, spec) in config.bidders.iter().enumerate() {
            values[i] = spec.value_dist.sample(&mut rng);
            bids[i] = spec.strategy.bid(values[i]);
        }
        let outcome = resolve_auction(&bids, &config.rule);
        for (i, b) in acc.bidders.iter_mut().enumerate() {
            match outcome {
                Some((w, pay)) if w == i => {
                    b.wins += 1;
                    b.value.push(values[i]);
                    b.cost.push(pay);
                    b.value_cost.add(values[i] * pay);
                }
                _ => {
                    b.value.push(0.0);
                    b.cost.push(0.0);
                }
            }
        }
        match outcome {
            Some((w, pay)) => {
                acc.sales += 1;
                acc.revenue.push(pay);
                acc.welfare.push(values[w]);
                acc.revenue_welfare.add(pay * values[w]);
            }
            None => {
                acc.revenue.push(0.0);
                acc.welfare.push(0.0);
            }
        }
    }
    acc.auctions = len;
    acc
}

/// Runs the market and returns the aggregate report.
pub fn run(config: &MarketConfig, exec: Execution) -> Result<SimReport> {
    run_with_blocks(config, exec).map(|(r, _)| r)
}

/// Like [`run`], also returning per-block summaries in block order.
pub fn run_with_blocks(config: &MarketConfig, exec: Execution) -> Result<(SimReport, Vec<BlockSummary>)> {
    config.validate()?;
    let plan = block_plan(config.auctions, DEFAULT_BLOCK_LEN);
    let blocks = exec.map_blocks(plan.len(), |i| {
        let (block, len) = plan[i];
        simulate_block(config, block, len)
    });

    let mut total = BlockAcc::new(config.bidders.len());
    let mut summaries = Vec::with_capacity(blocks.len());
    for (b, (block, _)) in blocks.iter().zip(&plan) {
        summaries.push(BlockSummary {
            block: *block,
            auctions: b.auctions,
            sales: b.sales,
            revenue: b.revenue.sum.value(),
            welfare: b.welfare.sum.value(),
        });
        total.merge(b);
    }
    Ok((report(&total), summaries))
}

fn report(acc: &BlockAcc) -> SimReport {
    let n = acc.auctions;
    let bidders: Vec<BidderReport> = acc
        .bidders
        .iter()
        .map(|b| {
            let value_won = b.value.sum.value();
            let cost = b.cost.sum.value();
            let empirical_cpa = if value_won > 0.0 { cost / value_won } else { 0.0 };
            BidderReport {
                wins: b.wins,
                value_won,
                cost,
                empirical_cpa,
                empirical_cpa_se: ratio_std_error(
                    n,
                    cost,
                    value_won,
                    b.cost.sum_sq.value(),
                    b.value.sum_sq.value(),
                    b.value_cost.value(),
                ),
                profit_in_value: (value_won - cost) / n as f64,
                mean_value: b.value.mean(n),
                mean_value_se: b.value.std_error(n),
                mean_cost: b.cost.mean(n),
                mean_cost_se: b.cost.std_error(n),
            }
        })
        .collect();
    let seller_revenue = bidders.iter().map(|b| b.cost).sum::<f64>();
    let welfare = bidders.iter().map(|b| b.value_won).sum::<f64>();
    let rev = acc.revenue.sum.value();
    let wel = acc.welfare.sum.value();
    SimReport {
        auctions: n,
        sales: acc.sales,
        seller_revenue,
        welfare,
        seller_revenue_mean: acc.revenue.mean(n),
        seller_revenue_se: acc.revenue.std_error(n),
        welfare_mean: acc.welfare.mean(n),
        welfare_se: acc.welfare.std_error(n),
        market_cpa: if wel > 0.0 { rev / wel } else { 0.0 },
        market_cpa_se: ratio_std_error(
            n,
            rev,
            wel,
            acc.revenue.sum_sq.value(),
            acc.welfare.sum_sq.value(),
            acc.revenue_welfare.value(),
        ),
        bidders,
    }
}

/// Outcome for one candidate multiplier of a deviating bidder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationRow {
    pub multiplier: f64,
    pub wins: u64,
    pub empirical_cpa: f64,
    pub empirical_cpa_se: f64,
    pub mean_value: f64,
    pub mean_value_se: f64,
    /// Empirical CPA at most the bidder's target.
    pub feasible: bool,
}

/// Replaces bidder `bidder`'s strategy by `m·v` for each `m` in the grid,
/// keeping everyone else and the seed fixed (common random numbers).
pub fn deviation_scan(
    config: &MarketConfig,
    bidder: usize,
    grid: &[f64],
    exec: Execution,
) -> Result<Vec<DeviationRow>> {
    if bidder >= config.bidders.len() {
        return Err(Error::invalid(
            "bidder_index",
            format!("{} out of range for {} bidders", bidder, config.bidders.len()),
        ));
    }
    if grid.is_empty() {
        return Err(Error::invalid("grid", "multiplier grid must be nonempty"));
    }
    let target = config.bidders[bidder].target_cpa;
    grid.iter()
        .map(|&m| {
            let mut cfg = config.clone();
            cfg.bidders[bidder].strategy = BidStrategy::linear(m)?;
            let rep = run(&cfg, exec)?;
            let b = &rep.bidders[bidder];
            Ok(DeviationRow {
                multiplier: m,
                wins: b.wins,
                empirical_cpa: b.empirical_cpa,
                empirical_cpa_se: b.empirical_cpa_se,
                mean_value: b.mean_value,
                mean_value_se: b.mean_value_se,
                feasible: b.empirical_cpa <= target,
            })
        })
        .collect()
}

/// Deviations of bidder 1 against the profile `(α₁, 6)` with values uniform
/// on `[2, 3]` and `T = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymmetricReport {
    pub deviations: Vec<DeviationRow>,
    /// Bidder 2's empirical CPA when bidder 1 bids zero.
    pub opponent_cpa_at_zero: f64,
    pub opponent_feasible_at_zero: bool,
    /// Bidder 1 never wins at `α₁ = 0` and bidder 2 meets the target.
    pub equilibrium_holds: bool,
}

pub const ASYMMETRIC_OPPONENT_MULTIPLIER: f64 = 6.0;

pub fn asymmetric_market(alpha1: f64, auctions: u64, seed: u64) -> Result<MarketConfig> {
    let values = ValueDistribution::uniform(2.0, 3.0)?;
    Ok(MarketConfig {
        bidders: vec![
            BidderSpec {
                value_dist: values,
                target_cpa: 1.0,
                strategy: BidStrategy::linear(alpha1)?,
            },
            BidderSpec {
                value_dist: values,
                target_cpa: 1.0,
                strategy: BidStrategy::linear(ASYMMETRIC_OPPONENT_MULTIPLIER)?,
            },
        ],
        rule: PaymentRule::second_price(),
        auctions,
        seed,
    })
}

pub fn check_asymmetric_equilibrium(
    deviation_grid: &[f64],
    auctions: u64,
    seed: u64,
    exec: Execution,
) -> Result<AsymmetricReport> {
    let base = asymmetric_market(0.0, auctions, seed)?;
    let deviations = deviation_scan(&base, 0, deviation_grid, exec)?;
    let at_zero = run(&base, exec)?;
    let opp = &at_zero.bidders[1];
    let opponent_feasible_at_zero = opp.empirical_cpa <= base.bidders[1].target_cpa;
    Ok(AsymmetricReport {
        equilibrium_holds: at_zero.bidders[0].wins == 0 && opponent_feasible_at_zero,
        opponent_cpa_at_zero: opp.empirical_cpa,
        opponent_feasible_at_zero,
        deviations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_go_to_lowest_index() {
        let rule = PaymentRule::second_price();
        assert_eq!(resolve_auction(&[1.0, 1.0, 0.5], &rule), Some((0, 1.0)));
        assert_eq!(resolve_auction(&[0.2, 0.9, 0.9], &rule), Some((1, 0.9)));
    }

    #[test]
    fn reserve_blocks_low_bids() {
        let rule = PaymentRule::second_price().with_reserve(0.5);
        assert_eq!(resolve_auction(&[0.3, 0.4], &rule), None);
        assert_eq!(resolve_auction(&[0.3, 0.6], &rule), Some((1, 0.5)));
        assert_eq!(resolve_auction(&[], &rule), None);
    }

    #[test]
    fn single_bidder_pays_nothing_in_second_price() {
        let cfg = MarketConfig::symmetric(
            ValueDistribution::uniform(0.0, 1.0).unwrap(),
            1,
            1.0,
            BidStrategy::linear(1.0).unwrap(),
            PaymentRule::second_price(),
            10_000,
            3,
        );
        let rep = run(&cfg, Execution::Sequential).unwrap();
        assert_eq!(rep.bidders[0].wins, 10_000);
        assert_eq!(rep.bidders[0].cost, 0.0);
        assert_eq!(rep.bidders[0].empirical_cpa, 0.0);
    }

    #[test]
    fn zero_bids_with_reserve_is_a_quiet_market() {
        let cfg = MarketConfig::symmetric(
            ValueDistribution::uniform(0.0, 1.0).unwrap(),
            3,
            1.0,
            BidStrategy::linear(0.0).unwrap(),
            PaymentRule::second_price().with_reserve(0.1),
            5_000,
            3,
        );
        let rep = run(&cfg, Execution::Sequential).unwrap();
        assert_eq!(rep.sales, 0);
        assert_eq!(rep.seller_revenue, 0.0);
        assert_eq!(rep.market_cpa, 0.0);
    }

    #[test]
    fn config_errors() {
        let mut cfg = MarketConfig::symmetric(
            ValueDistribution::uniform(0.0, 1.0).unwrap(),
            0,
            1.0,
            BidStrategy::linear(1.0).unwrap(),
            PaymentRule::second_price(),
            10,
            0,
        );
        assert!(matches!(
            run(&cfg, Execution::Sequential),
            Err(Error::InvalidParameter { name: "bidders", .. })
        ));
        cfg = asymmetric_market(1.0, 0, 0).unwrap();
        assert!(run(&cfg, Execution::Sequential).is_err());
        let cfg = asymmetric_market(1.0, 10, 0).unwrap();
        assert!(deviation_scan(&cfg, 2, &[1.0], Execution::Sequential).is_err());
        assert!(deviation_scan(&cfg, 0, &[], Execution::Sequential).is_err());
    }

    #[test]
    fn block_summaries_add_up() {
        let cfg = asymmetric_market(5.0, 100_000, 9).unwrap();
        let (rep, blocks) = run_with_blocks(&cfg, Execution::default()).unwrap();
        assert_eq!(blocks.iter().map(|b| b.auctions).sum::<u64>(), 100_000);
        assert_eq!(blocks.iter().map(|b| b.sales).sum::<u64>(), rep.sales);
        let rev: f64 = blocks.iter().map(|b| b.revenue).sum();
        assert!((rev - rep.seller_revenue).abs() <= 1e-9 * rep.seller_revenue);
    }
}
