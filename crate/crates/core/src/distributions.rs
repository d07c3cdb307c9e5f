//! Value laws, price-to-beat laws and their order statistics.
//!
//! Values are expressed in units of action (clicks, sales) and are
//! nonnegative. Exponential and log-normal laws have unbounded support;
//! wherever an integral must be truncated the cut is placed at the
//! `1 - 1e-12` quantile (see [`ValueDistribution::truncation_upper`]).
//!
//! Distributions appear in configuration files as tagged records, for
//! instance `{ family = "power", a = 2.0 }`:
//!
//! | family        | fields          |
//! |---------------|-----------------|
//! | `uniform`     | `lo`, `hi`      |
//! | `power`       | `a`             |
//! | `exponential` | `rate`          |
//! | `log_normal`  | `mu`, `sigma`   |
//! | `point_mass`  | `value`         |

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};
use crate::exec::Rng;
use crate::quadrature;
use crate::strategy::BidStrategy;

/// Upper tail mass discarded when integrating over an unbounded support.
pub const TAIL_MASS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValueDistribution {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// `F(v) = v^a` on `[0, 1]`.
    Power {
        a: f64,
    },
    Exponential {
        rate: f64,
    },
    LogNormal {
        mu: f64,
        sigma: f64,
    },
    /// Degenerate law; used for fixed values and for the absence of competition.
    PointMass {
        value: f64,
    },
}

fn finite(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite, got {x}")))
    }
}

impl ValueDistribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = ValueDistribution::Uniform { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn power(a: f64) -> Result<Self> {
        let d = ValueDistribution::Power { a };
        d.validate()?;
        Ok(d)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        let d = ValueDistribution::Exponential { rate };
        d.validate()?;
        Ok(d)
    }

    pub fn log_normal(mu: f64, sigma: f64) -> Result<Self> {
        let d = ValueDistribution::LogNormal { mu, sigma };
        d.validate()?;
        Ok(d)
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        let d = ValueDistribution::PointMass { value };
        d.validate()?;
        Ok(d)
    }

    /// Checks the parameter invariants. Deserialized values must go through this.
    pub fn validate(&self) -> Result<()> {
        match *self {
            ValueDistribution::Uniform { lo, hi } => {
                finite("lo", lo)?;
                finite("hi", hi)?;
                if lo < 0.0 {
                    return Err(Error::invalid("lo", "values are nonnegative"));
                }
                if lo >= hi {
                    return Err(Error::invalid("hi", format!("need lo < hi, got [{lo}, {hi}]")));
                }
            }
            ValueDistribution::Power { a } => {
                finite("a", a)?;
                if a <= 0.0 {
                    return Err(Error::invalid("a", format!("must be > 0, got {a}")));
                }
            }
            ValueDistribution::Exponential { rate } => {
                finite("rate", rate)?;
                if rate <= 0.0 {
                    return Err(Error::invalid("rate", format!("must be > 0, got {rate}")));
                }
            }
            ValueDistribution::LogNormal { mu, sigma } => {
                finite("mu", mu)?;
                finite("sigma", sigma)?;
                if sigma <= 0.0 {
                    return Err(Error::invalid("sigma", format!("must be > 0, got {sigma}")));
                }
            }
            ValueDistribution::PointMass { value } => {
                finite("value", value)?;
                if value < 0.0 {
                    return Err(Error::invalid("value", "values are nonnegative"));
                }
            }
        }
        Ok(())
    }

    pub fn family(&self) -> &'static str {
        match self {
            ValueDistribution::Uniform { .. } => "uniform",
            ValueDistribution::Power { .. } => "power",
            ValueDistribution::Exponential { .. } => "exponential",
            ValueDistribution::LogNormal { .. } => "log_normal",
            ValueDistribution::PointMass { .. } => "point_mass",
        }
    }

    /// The parameter swept in tables: `hi`, `a`, `rate`, `sigma` or `value`.
    pub fn primary_param(&self) -> f64 {
        match *self {
            ValueDistribution::Uniform { hi, .. } => hi,
            ValueDistribution::Power { a } => a,
            ValueDistribution::Exponential { rate } => rate,
            ValueDistribution::LogNormal { sigma, .. } => sigma,
            ValueDistribution::PointMass { value } => value,
        }
    }

    /// `[lower, upper]` of the support; `upper` is infinite for unbounded laws.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            ValueDistribution::Uniform { lo, hi } => (lo, hi),
            ValueDistribution::Power { .. } => (0.0, 1.0),
            ValueDistribution::Exponential { .. } | ValueDistribution::LogNormal { .. } => (0.0, f64::INFINITY),
            ValueDistribution::PointMass { value } => (value, value),
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.support().1.is_finite()
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, ValueDistribution::PointMass { .. })
    }

    /// Upper end of the support, or the `1 - TAIL_MASS` quantile when unbounded.
    pub fn truncation_upper(&self) -> f64 {
        let (_, hi) = self.support();
        if hi.is_finite() {
            hi
        } else {
            self.quantile(1.0 - TAIL_MASS)
        }
    }

    /// `P(v <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            ValueDistribution::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            ValueDistribution::Power { a } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    x.powf(a)
                }
            }
            ValueDistribution::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            ValueDistribution::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    normal_cdf((x.ln() - mu) / sigma)
                }
            }
            ValueDistribution::PointMass { value } => {
                if x >= value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `P(v < x)`; differs from [`cdf`](Self::cdf) only at atoms.
    pub fn cdf_left(&self, x: f64) -> f64 {
        match *self {
            ValueDistribution::PointMass { value } => {
                if x > value {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.cdf(x),
        }
    }

    /// Density; zero for the point mass, which callers treat separately.
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            ValueDistribution::Uniform { lo, hi } => {
                if x >= lo && x <= hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            ValueDistribution::Power { a } => {
                if x > 0.0 && x <= 1.0 {
                    a * x.powf(a - 1.0)
                } else {
                    0.0
                }
            }
            ValueDistribution::Exponential { rate } => {
                if x >= 0.0 {
                    rate * (-rate * x).exp()
                } else {
                    0.0
                }
            }
            ValueDistribution::LogNormal { mu, sigma } => {
                if x > 0.0 {
                    let z = (x.ln() - mu) / sigma;
                    normal_pdf(z) / (x * sigma)
                } else {
                    0.0
                }
            }
            ValueDistribution::PointMass { .. } => 0.0,
        }
    }

    /// Inverse CDF on `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match *self {
            ValueDistribution::Uniform { lo, hi } => lo + (hi - lo) * u,
            ValueDistribution::Power { a } => u.powf(1.0 / a),
            ValueDistribution::Exponential { rate } => -(-u).ln_1p() / rate,
            ValueDistribution::LogNormal { mu, sigma } => (mu + sigma * normal_quantile(u)).exp(),
            ValueDistribution::PointMass { value } => value,
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match *self {
            ValueDistribution::LogNormal { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                (mu + sigma * z).exp()
            }
            ValueDistribution::PointMass { value } => value,
            _ => self.quantile(rng.random::<f64>()),
        }
    }

    /// `count` draws from the stream.
    pub fn sample_n(&self, rng: &mut Rng, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.sample(rng)).collect()
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ValueDistribution::Uniform { lo, hi } => 0.5 * (lo + hi),
            ValueDistribution::Power { a } => a / (a + 1.0),
            ValueDistribution::Exponential { rate } => 1.0 / rate,
            ValueDistribution::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            ValueDistribution::PointMass { value } => value,
        }
    }

    /// `E[v · 1{v < x}]`, in closed form for every family.
    pub fn partial_expectation(&self, x: f64) -> f64 {
        match *self {
            ValueDistribution::Uniform { lo, hi } => {
                let y = x.clamp(lo, hi);
                (y - lo) * (y + lo) / (2.0 * (hi - lo))
            }
            ValueDistribution::Power { a } => {
                let y = x.clamp(0.0, 1.0);
                a / (a + 1.0) * y.powf(a + 1.0)
            }
            ValueDistribution::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    // (1 − e^{−z}(1 + z)) / rate with z = rate·x.
                    gamma_lr(2.0, rate * x) / rate
                }
            }
            ValueDistribution::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    self.mean() * normal_cdf((x.ln() - mu - sigma * sigma) / sigma)
                }
            }
            ValueDistribution::PointMass { value } => {
                if x > value {
                    value
                } else {
                    0.0
                }
            }
        }
    }

    /// Expected maximum of `k` i.i.d. draws.
    pub fn expected_max(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::invalid("k", "need at least one draw"));
        }
        let kf = k as f64;
        Ok(match *self {
            ValueDistribution::Uniform { lo, hi } => lo + (hi - lo) * kf / (kf + 1.0),
            ValueDistribution::Power { a } => a * kf / (a * kf + 1.0),
            ValueDistribution::Exponential { rate } => harmonic(k) / rate,
            ValueDistribution::LogNormal { sigma, .. } => {
                let mean = self.mean();
                match k {
                    1 => mean,
                    2 => 2.0 * mean * normal_cdf(sigma / std::f64::consts::SQRT_2),
                    _ => {
                        // Exponential tilt: E max = E[v] ∫ k Φ(u + σ)^{k-1} φ(u) du.
                        let tilted = quadrature::integrate(
                            |u| kf * normal_cdf(u + sigma).powi(k as i32 - 1) * normal_pdf(u),
                            -12.0,
                            12.0,
                        )?;
                        mean * tilted
                    }
                }
            }
            ValueDistribution::PointMass { value } => value,
        })
    }

    /// Whether [`expected_max`](Self::expected_max) is pure closed form for this `k`.
    pub fn has_closed_form_max(&self, k: usize) -> bool {
        !matches!(self, ValueDistribution::LogNormal { .. }) || k <= 2
    }

    /// `E max` by direct quadrature of `lo + ∫ (1 - F(t)^k) dt` over the
    /// (truncated) support. Independent of the closed forms.
    pub fn expected_max_quadrature(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::invalid("k", "need at least one draw"));
        }
        let (lo, _) = self.support();
        if !self.is_continuous() {
            return Ok(lo);
        }
        let upper = self.truncation_upper();
        let tail = quadrature::integrate(|t| 1.0 - self.cdf(t).powi(k as i32), lo, upper)?;
        Ok(lo + tail)
    }

    /// Expected second-highest of `n` draws via
    /// `E Y₂⁽ⁿ⁾ = n E Y₁⁽ⁿ⁻¹⁾ − (n − 1) E Y₁⁽ⁿ⁾`.
    pub fn second_order_stat(&self, n: usize) -> Result<f64> {
        if n < 2 {
            return Err(Error::invalid("n", "need at least two draws"));
        }
        let nf = n as f64;
        Ok(nf * self.expected_max(n - 1)? - (nf - 1.0) * self.expected_max(n)?)
    }

    /// `E[M · 1{M < y}]` where `M` is the max of `k` draws.
    pub(crate) fn max_partial_expectation(&self, k: usize, y: f64) -> Result<f64> {
        if k == 1 {
            return Ok(self.partial_expectation(y));
        }
        let kf = k as f64;
        match *self {
            ValueDistribution::Power { a } => Ok(ValueDistribution::Power { a: a * kf }.partial_expectation(y)),
            ValueDistribution::Uniform { lo, hi } => {
                let w = hi - lo;
                let scaled = ValueDistribution::Power { a: kf };
                let z = (y - lo) / w;
                Ok(lo * scaled.cdf_left(z) + w * scaled.partial_expectation(z))
            }
            ValueDistribution::PointMass { value } => Ok(if y > value { value } else { 0.0 }),
            ValueDistribution::Exponential { .. } | ValueDistribution::LogNormal { .. } => {
                if y <= 0.0 {
                    return Ok(0.0);
                }
                if y >= self.truncation_upper() {
                    return self.expected_max(k);
                }
                // ∫_0^y (F(y)^k − F(t)^k) dt, free of cancellation.
                let top = self.cdf(y).powi(k as i32);
                quadrature::integrate_nonnegative(|t| top - self.cdf(t).powi(k as i32), 0.0, y, &[], y * top)
            }
        }
    }

    /// `E[h(v)]` for `h ≥ 0` of natural size `scale`, by quadrature over the truncated support.
    pub(crate) fn expectation<F: Fn(f64) -> f64>(&self, h: F, breaks: &[f64], scale: f64) -> Result<f64> {
        match *self {
            ValueDistribution::PointMass { value } => Ok(h(value)),
            ValueDistribution::Power { a } if a < 1.0 => {
                // Density is singular at 0; integrate in quantile space instead.
                let qbreaks: Vec<f64> = breaks.iter().map(|&b| self.cdf(b)).collect();
                quadrature::integrate_nonnegative(|u| h(self.quantile(u)), 0.0, 1.0, &qbreaks, scale)
            }
            _ => {
                let (lo, _) = self.support();
                let hi = self.truncation_upper();
                quadrature::integrate_nonnegative(|v| h(v) * self.pdf(v), lo, hi, breaks, scale)
            }
        }
    }
}

/// Highest competing bid faced by one bidder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriceToBeat {
    /// The price to beat follows a given law, e.g. `G(t) = t^a` on `[0, 1]`.
    Explicit { law: ValueDistribution },
    /// Max over `opponents` bids, each the strategy applied to an independent value draw.
    Derived {
        opponents: usize,
        values: ValueDistribution,
        strategy: BidStrategy,
    },
}

impl PriceToBeat {
    pub fn explicit(law: ValueDistribution) -> Self {
        PriceToBeat::Explicit { law }
    }

    pub fn derived(opponents: usize, values: ValueDistribution, strategy: BidStrategy) -> Self {
        PriceToBeat::Derived {
            opponents,
            values,
            strategy,
        }
    }

    /// No competition: the price to beat is identically zero.
    pub fn none() -> Self {
        PriceToBeat::Explicit {
            law: ValueDistribution::PointMass { value: 0.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PriceToBeat::Explicit { law } => law.validate(),
            PriceToBeat::Derived { values, strategy, .. } => {
                values.validate()?;
                strategy.validate()
            }
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match self {
            PriceToBeat::Explicit { law } => law.sample(rng),
            PriceToBeat::Derived {
                opponents,
                values,
                strategy,
            } => (0..*opponents)
                .map(|_| strategy.bid(values.sample(rng)))
                .fold(0.0, f64::max),
        }
    }

    /// Support of the price to beat, truncated when unbounded.
    pub fn truncated_support(&self) -> (f64, f64) {
        match self {
            PriceToBeat::Explicit { law } => (law.support().0, law.truncation_upper()),
            PriceToBeat::Derived {
                opponents,
                values,
                strategy,
            } => {
                if *opponents == 0 {
                    (0.0, 0.0)
                } else {
                    (
                        strategy.bid(values.support().0),
                        strategy.bid(values.truncation_upper()),
                    )
                }
            }
        }
    }

    /// `P(b⁻ < x)`.
    pub fn win_probability(&self, x: f64) -> f64 {
        match self {
            PriceToBeat::Explicit { law } => law.cdf_left(x),
            PriceToBeat::Derived {
                opponents,
                values,
                strategy,
            } => {
                if *opponents == 0 {
                    return if x > 0.0 { 1.0 } else { 0.0 };
                }
                match strategy.value_threshold(x) {
                    Threshold::Never => 0.0,
                    Threshold::Always => 1.0,
                    Threshold::Below(y) => values.cdf_left(y).powi(*opponents as i32),
                }
            }
        }
    }

    /// `E[b⁻ · 1{b⁻ < x}]`: expected payment of a second-price bid `x`.
    pub fn expected_cost(&self, x: f64) -> Result<f64> {
        match self {
            PriceToBeat::Explicit { law } => Ok(law.partial_expectation(x)),
            PriceToBeat::Derived {
                opponents,
                values,
                strategy,
            } => {
                if *opponents == 0 {
                    return Ok(0.0);
                }
                let k = *opponents;
                match strategy.value_threshold(x) {
                    Threshold::Never => Ok(0.0),
                    Threshold::Always => Ok(strategy.slope * values.expected_max(k)? + strategy.intercept),
                    Threshold::Below(y) => {
                        let below = values.cdf_left(y).powi(k as i32);
                        Ok(strategy.slope * values.max_partial_expectation(k, y)? + strategy.intercept * below)
                    }
                }
            }
        }
    }
}

/// Values `v` with `strategy.bid(v) < x`.
pub(crate) enum Threshold {
    Never,
    Always,
    Below(f64),
}

fn harmonic(k: usize) -> f64 {
    (1..=k).map(|i| 1.0 / i as f64).sum()
}

pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

pub(crate) fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile: Acklam's rational approximation refined by one Halley step.
pub(crate) fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}
