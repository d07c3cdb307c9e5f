//! Static bidding under a CPA constraint: best replies, symmetric equilibria
//! for mixed first/second-price rules, equilibrium revenue and reserve prices.

use serde::{Deserialize, Serialize};

use crate::competition::gamma_order_stat;
use crate::distributions::{PriceToBeat, Threshold, ValueDistribution, TAIL_MASS};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::simulator::{self, BidderSpec, MarketConfig};

/// Payment on a win: `S(b, b⁻) = (1 − κ)·b + κ·b⁻`, with a reserve acting as
/// both participation floor and price floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaymentRule {
    /// Degree of second-priceness: 1 is second price, 0 is first price.
    pub kappa: f64,
    #[serde(default)]
    pub reserve: f64,
}

impl Default for PaymentRule {
    fn default() -> Self {
        Self::second_price()
    }
}

impl PaymentRule {
    pub fn new(kappa: f64, reserve: f64) -> Result<Self> {
        let rule = PaymentRule { kappa, reserve };
        rule.validate()?;
        Ok(rule)
    }

    pub fn second_price() -> Self {
        PaymentRule {
            kappa: 1.0,
            reserve: 0.0,
        }
    }

    pub fn first_price() -> Self {
        PaymentRule {
            kappa: 0.0,
            reserve: 0.0,
        }
    }

    pub fn with_reserve(self, reserve: f64) -> Self {
        PaymentRule { reserve, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(Error::invalid(
                "kappa",
                format!("must lie in [0, 1], got {}", self.kappa),
            ));
        }
        if !(self.reserve >= 0.0 && self.reserve.is_finite()) {
            return Err(Error::invalid(
                "reserve",
                format!("must be finite and >= 0, got {}", self.reserve),
            ));
        }
        Ok(())
    }

    /// `S(b, b⁻)` for `b ≥ b⁻`. Written as `b − κ(b − b⁻)` so that `S(b, b) = b`
    /// holds exactly; pure first and second price return an input unchanged.
    #[inline]
    pub fn payment(&self, bid: f64, price_to_beat: f64) -> f64 {
        if self.kappa == 1.0 {
            price_to_beat
        } else if self.kappa == 0.0 {
            bid
        } else {
            bid - self.kappa * (bid - price_to_beat)
        }
    }

    /// Charge to a winner bidding `bid` when the runner-up bid is `second`.
    #[inline]
    pub fn charge(&self, bid: f64, second: f64) -> f64 {
        self.payment(bid, second.max(self.reserve))
    }
}

/// Affine bid map `v ↦ slope·v + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BidStrategy {
    /// Bid multiplier α.
    pub slope: f64,
    #[serde(default)]
    pub intercept: f64,
}

impl BidStrategy {
    pub fn linear(slope: f64) -> Result<Self> {
        Self::affine(slope, 0.0)
    }

    pub fn affine(slope: f64, intercept: f64) -> Result<Self> {
        let s = BidStrategy { slope, intercept };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slope >= 0.0 && self.slope.is_finite()) {
            return Err(Error::invalid(
                "slope",
                format!("must be finite and >= 0, got {}", self.slope),
            ));
        }
        if !(self.intercept >= 0.0 && self.intercept.is_finite()) {
            return Err(Error::invalid(
                "intercept",
                format!("must be finite and >= 0, got {}", self.intercept),
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn bid(&self, value: f64) -> f64 {
        self.slope * value + self.intercept
    }

    pub(crate) fn value_threshold(&self, x: f64) -> Threshold {
        if self.slope > 0.0 {
            Threshold::Below((x - self.intercept) / self.slope)
        } else if self.intercept < x {
            Threshold::Always
        } else {
            Threshold::Never
        }
    }
}

/// One bidder's static problem: maximize expected value won subject to
/// expected cost ≤ T · expected value, in a second-price auction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpaProblem {
    pub value_dist: ValueDistribution,
    pub price_to_beat: PriceToBeat,
    pub target_cpa: f64,
}

impl CpaProblem {
    pub fn new(value_dist: ValueDistribution, price_to_beat: PriceToBeat, target_cpa: f64) -> Result<Self> {
        let p = CpaProblem {
            value_dist,
            price_to_beat,
            target_cpa,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.value_dist.validate()?;
        self.price_to_beat.validate()?;
        if !(self.target_cpa > 0.0 && self.target_cpa.is_finite()) {
            return Err(Error::invalid(
                "target_cpa",
                format!("must be finite and > 0, got {}", self.target_cpa),
            ));
        }
        Ok(())
    }

    /// Smallest multiplier that beats the (truncated) price to beat for all
    /// but a `1e-9` fraction of values, times two. Never below `2T`.
    pub fn alpha_cap(&self) -> f64 {
        let (_, top_bid) = self.price_to_beat.truncated_support();
        let (v_lo, _) = self.value_dist.support();
        let v_floor = v_lo.max(self.value_dist.quantile(1e-9));
        let beat_all = if top_bid <= 0.0 {
            0.0
        } else if v_floor > 0.0 {
            top_bid / v_floor
        } else {
            f64::INFINITY
        };
        2.0 * beat_all.max(self.target_cpa)
    }
}

/// Expected value and cost of the linear bid `α·v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CpaEvaluation {
    pub alpha: f64,
    pub expected_value: f64,
    pub expected_cost: f64,
}

impl CpaEvaluation {
    /// `None` when the bid never wins: no value, no cost, CPA undefined.
    pub fn cpa(&self) -> Option<f64> {
        (self.expected_value > 0.0).then(|| self.expected_cost / self.expected_value)
    }

    pub fn cpa_or_zero(&self) -> f64 {
        self.cpa().unwrap_or(0.0)
    }
}

/// `E[b⁻·1{b⁻ < αv}]` and `E[v·1{b⁻ < αv}]` by quadrature over the value law.
pub fn cpa_of_multiplier(problem: &CpaProblem, alpha: f64) -> Result<CpaEvaluation> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("alpha", format!("must be finite and >= 0, got {alpha}")));
    }
    let ptb = &problem.price_to_beat;
    let (b_lo, b_hi) = ptb.truncated_support();
    let breaks: Vec<f64> = if alpha > 0.0 {
        vec![b_lo / alpha, b_hi / alpha]
    } else {
        Vec::new()
    };
    let mean = problem.value_dist.mean();
    let expected_value = problem
        .value_dist
        .expectation(|v| v * ptb.win_probability(alpha * v), &breaks, mean)?;
    // The cost integrand may itself need quadrature; surface its failure.
    let failure = std::cell::Cell::new(None);
    let expected_cost = problem.value_dist.expectation(
        |v| match ptb.expected_cost(alpha * v) {
            Ok(c) => c,
            Err(e) => {
                failure.set(Some(e));
                f64::NAN
            }
        },
        &breaks,
        alpha * mean,
    );
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let expected_cost = expected_cost?;
    // Win mass below the truncated tails: treated as no wins, like the tails themselves.
    if expected_value < TAIL_MASS * mean {
        return Ok(CpaEvaluation {
            alpha,
            expected_value: 0.0,
            expected_cost: 0.0,
        });
    }
    Ok(CpaEvaluation {
        alpha,
        expected_value,
        expected_cost,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestReplyResult {
    pub alpha_star: f64,
    /// Lagrange multiplier of the CPA constraint, `1 / (α* − T)`; infinite when `α* = T`.
    pub lagrange_lambda: f64,
    pub binding: bool,
    pub achieved_cpa: f64,
    pub expected_value: f64,
    pub alpha_cap: f64,
    pub iterations: usize,
}

/// Tolerance on the CPA gap `cpa(α) − T`.
pub const BEST_REPLY_TOL: f64 = 1e-6;
const MAX_BISECTIONS: usize = 200;

/// Largest multiplier meeting the CPA constraint, by bisection on `[T, alpha_cap]`.
pub fn best_reply(problem: &CpaProblem) -> Result<BestReplyResult> {
    problem.validate()?;
    let target = problem.target_cpa;
    let cap = problem.alpha_cap();
    let mut trace: Vec<(f64, f64)> = Vec::new();
    let mut eval = |alpha: f64| -> Result<CpaEvaluation> {
        let e = cpa_of_multiplier(problem, alpha)?;
        trace.push((alpha, e.cpa_or_zero()));
        Ok(e)
    };

    let at_cap = eval(cap)?;
    let at_cap_cpa = at_cap.cpa_or_zero();
    if at_cap_cpa <= target - BEST_REPLY_TOL {
        return Ok(BestReplyResult {
            alpha_star: cap,
            lagrange_lambda: 0.0,
            binding: false,
            achieved_cpa: at_cap_cpa,
            expected_value: at_cap.expected_value,
            alpha_cap: cap,
            iterations: 0,
        });
    }

    let mut lo = target;
    let mut hi = cap;
    let mut lo_eval = eval(lo)?;
    let mut hi_eval = at_cap;
    let mut iterations = 0;
    while iterations < MAX_BISECTIONS && hi - lo > 1e-13 * hi {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let e = eval(mid)?;
        if e.cpa_or_zero() < target {
            lo = mid;
            lo_eval = e;
        } else {
            hi = mid;
            hi_eval = e;
        }
    }

    trace.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(w) = trace.windows(2).find(|w| w[1].1 < w[0].1 - 1e-9) {
        return Err(Error::Solver(format!(
            "CPA decreased from {} at alpha = {} to {} at alpha = {}",
            w[0].1, w[0].0, w[1].1, w[1].0
        )));
    }

    let hi_gap = hi_eval.cpa_or_zero() - target;
    let (alpha_star, chosen, binding) = if hi_gap.abs() <= BEST_REPLY_TOL {
        (hi, hi_eval, true)
    } else {
        // CPA jumps over the target (atoms in the price to beat): keep the feasible side.
        (lo, lo_eval, false)
    };
    let lagrange_lambda = if alpha_star > target {
        1.0 / (alpha_star - target)
    } else {
        f64::INFINITY
    };
    Ok(BestReplyResult {
        alpha_star,
        lagrange_lambda,
        binding,
        achieved_cpa: chosen.cpa_or_zero(),
        expected_value: chosen.expected_value,
        alpha_cap: cap,
        iterations,
    })
}

/// Slope of the standard (unconstrained) symmetric equilibrium bid `b̂(v) = s·v`.
///
/// Second price: `s = 1` for any law. For `F(v) = (v / h)^a` on `[0, h]` and
/// `m = a(n − 1)` opponents' exponent, the mixed rule has `s = m / (m + 1 − κ)`,
/// which is the classic `E[Y | Y < v]` shading when `κ = 0`.
pub fn standard_bid_slope(dist: &ValueDistribution, n: usize, kappa: f64) -> Result<f64> {
    if kappa == 1.0 {
        return Ok(1.0);
    }
    let a = match *dist {
        ValueDistribution::Power { a } => a,
        ValueDistribution::Uniform { lo: 0.0, .. } => 1.0,
        _ => {
            return Err(Error::Unsupported(format!(
                "no linear standard equilibrium bid for {} values with kappa = {kappa}",
                dist.family()
            )))
        }
    };
    let m = a * (n as f64 - 1.0);
    Ok(m / (m + 1.0 - kappa))
}

/// Symmetric constrained equilibrium `b*(v) = (T / γ(F, n))·b̂(v)`.
pub fn symmetric_equilibrium(
    dist: &ValueDistribution,
    n: usize,
    target_cpa: f64,
    rule: &PaymentRule,
) -> Result<BidStrategy> {
    dist.validate()?;
    rule.validate()?;
    if n < 2 {
        return Err(Error::invalid("n", "need at least two bidders"));
    }
    if !(target_cpa > 0.0 && target_cpa.is_finite()) {
        return Err(Error::invalid(
            "target_cpa",
            format!("must be finite and > 0, got {target_cpa}"),
        ));
    }
    if rule.reserve != 0.0 {
        return Err(Error::Unsupported(
            "closed-form equilibrium requires a zero reserve; use reserve_sweep".into(),
        ));
    }
    let gamma = gamma_order_stat(dist, n)?.gamma;
    let hat = standard_bid_slope(dist, n, rule.kappa)?;
    BidStrategy::linear(target_cpa / gamma * hat)
}

/// Seller revenue at the symmetric equilibrium: `T · E max(v₁..vₙ)`, the same
/// for every rule in the first/second-price family.
pub fn expected_seller_revenue_at_equilibrium(dist: &ValueDistribution, n: usize, target_cpa: f64) -> Result<f64> {
    if !(target_cpa >= 0.0 && target_cpa.is_finite()) {
        return Err(Error::invalid(
            "target_cpa",
            format!("must be finite and >= 0, got {target_cpa}"),
        ));
    }
    Ok(target_cpa * dist.expected_max(n)?)
}

/// One `(reserve, multiplier)` cell of a reserve sweep, per buyer and per auction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReserveRow {
    pub reserve: f64,
    pub multiplier: f64,
    pub payment: f64,
    pub payment_se: f64,
    pub value: f64,
    pub value_se: f64,
    pub value_minus_payment: f64,
    pub cpa: f64,
    pub feasible: bool,
}

/// Equilibrium point for one reserve: where the CPA curve crosses `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReserveEquilibrium {
    pub reserve: f64,
    pub multiplier: f64,
    /// Total seller revenue per auction (all buyers).
    pub seller_revenue: f64,
    pub seller_revenue_se: f64,
    /// False when the grid does not straddle the crossing.
    pub bracketed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReserveSweep {
    pub rows: Vec<ReserveRow>,
    pub equilibria: Vec<ReserveEquilibrium>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReserveSweepConfig {
    pub dist: ValueDistribution,
    pub bidders: usize,
    pub target_cpa: f64,
    pub kappa: f64,
    pub auctions: u64,
    pub seed: u64,
}

/// Symmetric linear profiles across reserve and multiplier grids. Every cell
/// reuses the same seed, so curves are compared on common random numbers.
pub fn reserve_sweep(
    cfg: &ReserveSweepConfig,
    reserves: &[f64],
    multipliers: &[f64],
    exec: Execution,
) -> Result<ReserveSweep> {
    if reserves.is_empty() || multipliers.is_empty() {
        return Err(Error::invalid("grid", "reserve and multiplier grids must be nonempty"));
    }
    if cfg.bidders == 0 {
        return Err(Error::invalid("n", "need at least one bidder"));
    }
    let mut grid = multipliers.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let n = cfg.bidders as f64;

    let mut rows = Vec::with_capacity(reserves.len() * grid.len());
    let mut equilibria = Vec::with_capacity(reserves.len());
    for &reserve in reserves {
        let rule = PaymentRule::new(cfg.kappa, reserve)?;
        let mut curve = Vec::with_capacity(grid.len());
        for &m in &grid {
            let strategy = BidStrategy::linear(m)?;
            let market = MarketConfig {
                bidders: vec![
                    BidderSpec {
                        value_dist: cfg.dist,
                        target_cpa: cfg.target_cpa,
                        strategy,
                    };
                    cfg.bidders
                ],
                rule,
                auctions: cfg.auctions,
                seed: cfg.seed,
            };
            let report = simulator::run(&market, exec)?;
            let row = ReserveRow {
                reserve,
                multiplier: m,
                payment: report.seller_revenue_mean / n,
                payment_se: report.seller_revenue_se / n,
                value: report.welfare_mean / n,
                value_se: report.welfare_se / n,
                value_minus_payment: (report.welfare_mean - report.seller_revenue_mean) / n,
                cpa: report.market_cpa,
                feasible: report.market_cpa <= cfg.target_cpa,
            };
            curve.push(row);
            rows.push(row);
        }
        equilibria.push(locate_equilibrium(reserve, &curve, cfg.target_cpa, n));
    }
    Ok(ReserveSweep { rows, equilibria })
}

fn locate_equilibrium(reserve: f64, curve: &[ReserveRow], target: f64, n: f64) -> ReserveEquilibrium {
    let last_feasible = curve.iter().rposition(|r| r.feasible);
    match last_feasible {
        Some(i) if i + 1 < curve.len() => {
            let (a, b) = (&curve[i], &curve[i + 1]);
            let w = if b.cpa > a.cpa {
                ((target - a.cpa) / (b.cpa - a.cpa)).clamp(0.0, 1.0)
            } else {
                0.0
            };
            ReserveEquilibrium {
                reserve,
                multiplier: a.multiplier + w * (b.multiplier - a.multiplier),
                seller_revenue: n * (a.payment + w * (b.payment - a.payment)),
                seller_revenue_se: n * ((1.0 - w) * a.payment_se + w * b.payment_se),
                bracketed: true,
            }
        }
        Some(i) => ReserveEquilibrium {
            reserve,
            multiplier: curve[i].multiplier,
            seller_revenue: n * curve[i].payment,
            seller_revenue_se: n * curve[i].payment_se,
            bracketed: false,
        },
        None => ReserveEquilibrium {
            reserve,
            multiplier: curve[0].multiplier,
            seller_revenue: n * curve[0].payment,
            seller_revenue_se: n * curve[0].payment_se,
            bracketed: false,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn half_value_uniform_competition(target: f64) -> CpaProblem {
        CpaProblem::new(
            ValueDistribution::point_mass(0.5).unwrap(),
            PriceToBeat::explicit(ValueDistribution::uniform(0.0, 1.0).unwrap()),
            target,
        )
        .unwrap()
    }

    #[test]
    fn payment_rule_extremes() {
        let sp = PaymentRule::second_price();
        let fp = PaymentRule::first_price();
        assert_eq!(sp.payment(0.9, 0.3), 0.3);
        assert_eq!(fp.payment(0.9, 0.3), 0.9);
        let mixed = PaymentRule::new(0.5, 0.0).unwrap();
        assert_relative_eq!(mixed.payment(0.9, 0.3), 0.6, epsilon = 1e-15);
        assert!(PaymentRule::new(1.5, 0.0).is_err());
        assert!(PaymentRule::new(0.5, -1.0).is_err());
    }

    #[test]
    fn reserve_floors_the_price() {
        let rule = PaymentRule::second_price().with_reserve(0.4);
        assert_eq!(rule.charge(1.0, 0.1), 0.4);
        assert_eq!(rule.charge(1.0, 0.7), 0.7);
    }

    #[test]
    fn cpa_examples() {
        let p = half_value_uniform_competition(1.0);
        let e = cpa_of_multiplier(&p, 1.0).unwrap();
        assert_relative_eq!(e.cpa().unwrap(), 0.5, epsilon = 1e-12);
        let e = cpa_of_multiplier(&p, 2.0).unwrap();
        assert_relative_eq!(e.cpa().unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn no_wins_is_reported_distinctly() {
        let p = CpaProblem::new(
            ValueDistribution::uniform(0.0, 1.0).unwrap(),
            PriceToBeat::explicit(ValueDistribution::uniform(0.5, 1.0).unwrap()),
            1.0,
        )
        .unwrap();
        let e = cpa_of_multiplier(&p, 0.1).unwrap();
        assert_eq!(e.cpa(), None);
        assert_eq!(e.cpa_or_zero(), 0.0);
        assert_eq!(e.expected_cost, 0.0);
    }

    #[test]
    fn best_reply_plateau_returns_smallest_full_win_multiplier() {
        let r = best_reply(&half_value_uniform_competition(1.0)).unwrap();
        assert!(r.binding);
        assert_relative_eq!(r.alpha_star, 2.0, epsilon = 1e-9);
        assert_relative_eq!(r.achieved_cpa, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn no_competition_is_slack() {
        let p = CpaProblem::new(ValueDistribution::uniform(0.0, 1.0).unwrap(), PriceToBeat::none(), 0.3).unwrap();
        let r = best_reply(&p).unwrap();
        assert!(!r.binding);
        assert_eq!(r.lagrange_lambda, 0.0);
        assert_eq!(r.alpha_star, r.alpha_cap);
    }

    #[test]
    fn best_reply_against_equilibrium_opponent() {
        let values = ValueDistribution::uniform(0.0, 1.0).unwrap();
        let p = CpaProblem::new(
            values,
            PriceToBeat::derived(1, values, BidStrategy::linear(0.8).unwrap()),
            0.4,
        )
        .unwrap();
        let r = best_reply(&p).unwrap();
        assert!(r.binding);
        assert_relative_eq!(r.alpha_star, 0.8, max_relative = 1e-6);
        assert_relative_eq!(r.lagrange_lambda, 1.0 / 0.4, max_relative = 1e-5);
    }

    #[test]
    fn equilibrium_examples() {
        let u = ValueDistribution::uniform(0.0, 1.0).unwrap();
        let sp = symmetric_equilibrium(&u, 2, 0.4, &PaymentRule::second_price()).unwrap();
        assert_relative_eq!(sp.slope, 0.8, epsilon = 1e-12);
        assert_eq!(sp.intercept, 0.0);
        for t in [0.2, 0.7, 1.3] {
            let fp = symmetric_equilibrium(&u, 2, t, &PaymentRule::first_price()).unwrap();
            assert_relative_eq!(fp.slope, t, epsilon = 1e-12);
        }
        let e = ValueDistribution::exponential(1.0).unwrap();
        let s = symmetric_equilibrium(&e, 2, 1.0, &PaymentRule::second_price()).unwrap();
        assert_relative_eq!(s.slope, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn unsupported_equilibria_error() {
        let e = ValueDistribution::exponential(1.0).unwrap();
        let err = symmetric_equilibrium(&e, 2, 1.0, &PaymentRule::first_price()).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
        let u = ValueDistribution::uniform(0.0, 1.0).unwrap();
        let err = symmetric_equilibrium(&u, 2, 1.0, &PaymentRule::second_price().with_reserve(0.1)).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn revenue_examples() {
        let u = ValueDistribution::uniform(0.0, 1.0).unwrap();
        assert_relative_eq!(
            expected_seller_revenue_at_equilibrium(&u, 2, 0.4).unwrap(),
            4.0 / 15.0,
            epsilon = 1e-15
        );
        assert_eq!(expected_seller_revenue_at_equilibrium(&u, 3, 0.0).unwrap(), 0.0);
        let e = ValueDistribution::exponential(1.0).unwrap();
        assert_relative_eq!(expected_seller_revenue_at_equilibrium(&e, 2, 1.0).unwrap(), 1.5);
    }

    #[test]
    fn reserve_above_every_bid_sells_nothing() {
        let cfg = ReserveSweepConfig {
            dist: ValueDistribution::uniform(0.0, 1.0).unwrap(),
            bidders: 2,
            target_cpa: 0.4,
            kappa: 1.0,
            auctions: 20_000,
            seed: 1,
        };
        let sweep = reserve_sweep(&cfg, &[5.0], &[0.5, 1.0, 2.0], Execution::Sequential).unwrap();
        assert!(sweep.rows.iter().all(|r| r.payment == 0.0 && r.value == 0.0));
        assert_eq!(sweep.equilibria[0].seller_revenue, 0.0);
    }

    #[test]
    fn deep_tail_cpa_stays_below_the_multiplier() {
        // Win probabilities from below 1e-300 up to 1 over the grid.
        let p = CpaProblem::new(
            ValueDistribution::uniform(0.0, 0.1).unwrap(),
            PriceToBeat::derived(
                4,
                ValueDistribution::log_normal(-0.8097287379651972, 0.2).unwrap(),
                BidStrategy::linear(2.337516979723081).unwrap(),
            ),
            0.1,
        )
        .unwrap();
        let mut prev = 0.0;
        for k in 0..=80 {
            let alpha = 0.2 * 1.05f64.powi(k);
            let cpa = cpa_of_multiplier(&p, alpha).unwrap().cpa_or_zero();
            assert!(
                cpa <= alpha && cpa >= prev - 1e-9,
                "alpha {alpha}: cpa {cpa} after {prev}"
            );
            prev = cpa;
        }
        let r = best_reply(&p).unwrap();
        assert!(r.achieved_cpa <= p.target_cpa + BEST_REPLY_TOL);
    }
}
