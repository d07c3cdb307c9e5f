//! CPA-constrained auctions: competition factors, static best replies and
//! symmetric equilibria, a seeded repeated-auction simulator and a
//! finite-difference HJB solver for the dynamic bidder.
//!
//! Monte Carlo work runs on rayon when the `parallel` feature (on by default)
//! is enabled and sequentially otherwise; see [`exec::Execution`]. Results do
//! not depend on which executor is used.

pub mod competition;
pub mod distributions;
pub mod error;
pub mod exec;
pub mod hjb;
pub mod quadrature;
pub mod simulator;
pub mod strategy;

pub use competition::{
    gamma_monte_carlo, gamma_order_stat, gamma_power_closed_form, gamma_quadrature, gamma_sweep,
    CompetitionFactorResult, CompetitionMethod,
};
pub use distributions::{PriceToBeat, ValueDistribution};
pub use error::{Error, Result};
pub use exec::Execution;
pub use simulator::{BidderSpec, MarketConfig, SimReport};
pub use strategy::{
    best_reply, cpa_of_multiplier, expected_seller_revenue_at_equilibrium, symmetric_equilibrium, BestReplyResult,
    BidStrategy, CpaProblem, PaymentRule,
};
