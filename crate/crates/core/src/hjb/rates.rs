//! Instantaneous value and cost rates of the multiplier bid `α·v` when values
//! are uniform on `[0, 1]` and the price to beat has CDF `t^a` on `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFunctions {
    /// Exponent of the price-to-beat CDF.
    pub a: f64,
}

impl RateFunctions {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid("a", format!("must be finite and > 0, got {a}")));
        }
        Ok(RateFunctions { a })
    }

    /// Expected value won per request, `E[v·1{b⁻ < αv}]`.
    pub fn value_rate(&self, alpha: f64) -> f64 {
        let a = self.a;
        if alpha <= 0.0 {
            0.0
        } else if alpha < 1.0 {
            alpha.powf(a) / (a + 2.0)
        } else {
            let inv2 = 1.0 / (alpha * alpha);
            inv2 / (a + 2.0) + 0.5 * (1.0 - inv2)
        }
    }

    /// Expected payment per request, `E[b⁻·1{b⁻ < αv}]`.
    pub fn cost_rate(&self, alpha: f64) -> f64 {
        let a = self.a;
        if alpha <= 0.0 {
            0.0
        } else if alpha < 1.0 {
            a * alpha.powf(a + 1.0) / ((a + 1.0) * (a + 2.0))
        } else {
            a / ((a + 1.0) * (a + 2.0) * alpha) * ((a + 2.0) * alpha - a - 1.0)
        }
    }

    /// `(R(α), C(α))`.
    pub fn rates(&self, alpha: f64) -> (f64, f64) {
        (self.value_rate(alpha), self.cost_rate(alpha))
    }

    /// Drift of the CPA slack, `T·R(α) − C(α)`.
    pub fn slack_drift(&self, target_cpa: f64, alpha: f64) -> f64 {
        let (r, c) = self.rates(alpha);
        target_cpa * r - c
    }

    /// Limits as `α → ∞`: `(E v, E b⁻) = (1/2, a/(a+1))`.
    pub fn saturation(&self) -> (f64, f64) {
        (0.5, self.a / (self.a + 1.0))
    }
}

/// `(R(α), C(α))` for price exponent `a`.
pub fn rates(a: f64, alpha: f64) -> Result<(f64, f64)> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::invalid("alpha", format!("must be >= 0, got {alpha}")));
    }
    Ok(RateFunctions::new(a)?.rates(alpha))
}
