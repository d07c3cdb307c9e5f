use approx::assert_relative_eq;
use cpa_auction::competition::gamma_order_stat;
use cpa_auction::simulator::run;
use cpa_auction::strategy::{
    best_reply, cpa_of_multiplier, expected_seller_revenue_at_equilibrium, reserve_sweep, symmetric_equilibrium,
    CpaProblem, PaymentRule, ReserveSweepConfig,
};
use cpa_auction::{BidStrategy, Execution, MarketConfig, PriceToBeat, ValueDistribution};

fn point_vs_uniform(target: f64) -> CpaProblem {
    CpaProblem::new(
        ValueDistribution::point_mass(0.5).unwrap(),
        PriceToBeat::explicit(ValueDistribution::uniform(0.0, 1.0).unwrap()),
        target,
    )
    .unwrap()
}

/// v ≡ 0.5 against b⁻ ~ U(0, 1): cost (α/2)²/2 and value α/4 for α ≤ 2.
fn point_vs_uniform_cpa(alpha: f64) -> f64 {
    let x = (0.5 * alpha).min(1.0);
    (x * x / 2.0) / (0.5 * x)
}

#[test]
fn cpa_examples() {
    let p = point_vs_uniform(1.0);
    for alpha in [0.25, 1.0, 1.5, 2.0, 3.0] {
        let e = cpa_of_multiplier(&p, alpha).unwrap();
        assert_relative_eq!(e.cpa().unwrap(), point_vs_uniform_cpa(alpha), max_relative = 1e-9);
    }
    assert_relative_eq!(
        cpa_of_multiplier(&p, 1.0).unwrap().cpa().unwrap(),
        0.5,
        max_relative = 1e-9
    );
    assert_relative_eq!(
        cpa_of_multiplier(&p, 2.0).unwrap().cpa().unwrap(),
        1.0,
        max_relative = 1e-9
    );

    let floor = CpaProblem::new(
        ValueDistribution::point_mass(0.5).unwrap(),
        PriceToBeat::explicit(ValueDistribution::uniform(0.2, 1.0).unwrap()),
        1.0,
    )
    .unwrap();
    let e = cpa_of_multiplier(&floor, 0.1).unwrap();
    assert_eq!(e.cpa(), None);
    assert_eq!(e.expected_cost, 0.0);
}

#[test]
fn best_reply_examples() {
    let r = best_reply(&point_vs_uniform(1.0)).unwrap();
    assert!(r.binding);
    assert_relative_eq!(r.alpha_star, 2.0, max_relative = 1e-5);
    assert_relative_eq!(r.lagrange_lambda, 1.0 / (r.alpha_star - 1.0), max_relative = 1e-12);

    let alone = CpaProblem::new(ValueDistribution::uniform(0.0, 1.0).unwrap(), PriceToBeat::none(), 0.5).unwrap();
    let r = best_reply(&alone).unwrap();
    assert!(!r.binding);
    assert_eq!(r.lagrange_lambda, 0.0);
    assert_eq!(r.alpha_star, r.alpha_cap);

    let values = ValueDistribution::uniform(0.0, 1.0).unwrap();
    let p = CpaProblem::new(
        values,
        PriceToBeat::derived(1, values, BidStrategy::linear(0.8).unwrap()),
        0.4,
    )
    .unwrap();
    assert_relative_eq!(best_reply(&p).unwrap().alpha_star, 0.8, max_relative = 1e-5);
}

#[test]
fn best_reply_beats_nearby_multipliers() {
    let values = ValueDistribution::power(2.0).unwrap();
    for (ptb, target) in [
        (PriceToBeat::explicit(ValueDistribution::power(1.5).unwrap()), 0.3),
        (PriceToBeat::derived(2, values, BidStrategy::linear(0.7).unwrap()), 0.5),
        (PriceToBeat::explicit(ValueDistribution::exponential(2.0).unwrap()), 0.6),
    ] {
        let p = CpaProblem::new(values, ptb, target).unwrap();
        let r = best_reply(&p).unwrap();
        assert!(r.binding);
        let above = cpa_of_multiplier(&p, 1.1 * r.alpha_star).unwrap();
        assert!(above.cpa_or_zero() > target, "{ptb:?}: +10% stays feasible");
        let below = cpa_of_multiplier(&p, 0.9 * r.alpha_star).unwrap();
        assert!(below.cpa_or_zero() <= target);
        assert!(below.expected_value < r.expected_value);
    }
}

#[test]
fn equilibrium_slope_is_a_fixed_point_of_best_reply() {
    let target = 0.7;
    for d in [
        ValueDistribution::uniform(0.0, 1.0).unwrap(),
        ValueDistribution::power(2.0).unwrap(),
        ValueDistribution::exponential(1.0).unwrap(),
        ValueDistribution::log_normal(0.0, 0.5).unwrap(),
    ] {
        for n in [2, 3, 5] {
            let eq = symmetric_equilibrium(&d, n, target, &PaymentRule::second_price()).unwrap();
            let p = CpaProblem::new(d, PriceToBeat::derived(n - 1, d, eq), target).unwrap();
            let r = best_reply(&p).unwrap();
            assert_relative_eq!(r.alpha_star, eq.slope, max_relative = 1e-3);
        }
    }
}

#[test]
fn equilibrium_examples() {
    let u = ValueDistribution::uniform(0.0, 1.0).unwrap();
    let sp = symmetric_equilibrium(&u, 2, 0.4, &PaymentRule::second_price()).unwrap();
    assert_relative_eq!(sp.slope, 0.8, max_relative = 1e-12);
    let fp = symmetric_equilibrium(&u, 2, 0.4, &PaymentRule::first_price()).unwrap();
    assert_relative_eq!(fp.slope, 0.4, max_relative = 1e-12);
    let e = ValueDistribution::exponential(1.0).unwrap();
    let s = symmetric_equilibrium(&e, 2, 1.0, &PaymentRule::second_price()).unwrap();
    assert_relative_eq!(s.slope, 3.0, max_relative = 1e-10);
    assert_relative_eq!(
        s.slope,
        1.0 / gamma_order_stat(&e, 2).unwrap().gamma,
        max_relative = 1e-12
    );
    assert!(symmetric_equilibrium(&e, 2, 1.0, &PaymentRule::new(0.5, 0.0).unwrap()).is_err());
    assert!(symmetric_equilibrium(&u, 2, 1.0, &PaymentRule::second_price().with_reserve(0.1)).is_err());
}

#[test]
fn equilibrium_revenue_matches_simulation() {
    let u = ValueDistribution::uniform(0.0, 1.0).unwrap();
    assert_relative_eq!(
        expected_seller_revenue_at_equilibrium(&u, 2, 0.4).unwrap(),
        4.0 / 15.0,
        max_relative = 1e-12
    );
    assert_eq!(expected_seller_revenue_at_equilibrium(&u, 2, 0.0).unwrap(), 0.0);

    let e = ValueDistribution::exponential(1.0).unwrap();
    let expected = expected_seller_revenue_at_equilibrium(&e, 2, 1.0).unwrap();
    assert_relative_eq!(expected, 1.5, max_relative = 1e-12);
    let rule = PaymentRule::second_price();
    let eq = symmetric_equilibrium(&e, 2, 1.0, &rule).unwrap();
    let rep = run(
        &MarketConfig::symmetric(e, 2, 1.0, eq, rule, 1_000_000, 3),
        Execution::default(),
    )
    .unwrap();
    assert!(
        (rep.seller_revenue_mean - expected).abs() <= 3.0 * rep.seller_revenue_se,
        "{rep:?}"
    );
    assert!((rep.market_cpa - 1.0).abs() <= 3.0 * rep.market_cpa_se);
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
    let sweep = reserve_sweep(&cfg, &[0.0, 2.0], &[0.8, 1.0], Execution::Sequential).unwrap();
    for row in sweep.rows.iter().filter(|r| r.reserve == 2.0) {
        assert_eq!(row.payment, 0.0);
        assert_eq!(row.value, 0.0);
    }
    assert!(sweep.rows.iter().any(|r| r.reserve == 0.0 && r.payment > 0.0));
}
