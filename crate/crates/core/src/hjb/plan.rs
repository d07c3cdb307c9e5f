//! Noise-free plan: with no noise the costate is constant, so the optimal
//! multiplier is constant. It is the largest `α` in the multiplier range with
//! `x0 + τ (T R(α) − C(α)) ≥ 0`.

use serde::Serialize;

use super::HjbConfig;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeterministicPlan {
    /// `None` for a zero horizon: there is nothing to decide.
    pub alpha: Option<f64>,
    pub feasible: bool,
    /// The constraint is slack even at the top of the multiplier range.
    pub capped: bool,
    pub terminal_state: f64,
    /// `τ · R(α)`.
    pub objective: f64,
}

pub fn deterministic_plan(config: &HjbConfig, x0: f64) -> Result<DeterministicPlan> {
    config.validate()?;
    let tau = config.horizon;
    if tau == 0.0 {
        return Ok(DeterministicPlan {
            alpha: None,
            feasible: x0 >= 0.0,
            capped: false,
            terminal_state: x0,
            objective: 0.0,
        });
    }
    let f = config.rate_functions()?;
    let t = config.target_cpa;
    let drift = |a: f64| f.slack_drift(t, a);
    let (lo, cap) = (config.alpha_grid.min, config.alpha_grid.max);
    let needed = -x0 / tau;

    let plan = |alpha: f64, capped: bool| {
        let terminal_state = x0 + tau * drift(alpha);
        DeterministicPlan {
            alpha: Some(alpha),
            feasible: terminal_state >= -1e-12,
            capped,
            terminal_state,
            objective: tau * f.value_rate(alpha),
        }
    };

    if drift(cap) >= needed {
        return Ok(plan(cap, true));
    }
    // Drift rises then falls in α (the CPA ratio is monotone); find its peak.
    let peak = golden_max(drift, lo, cap);
    if drift(peak) < needed {
        // Infeasible: the least-violating multiplier.
        return Ok(plan(peak, false));
    }
    let (mut a, mut b) = (peak, cap);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if drift(mid) >= needed {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-14 * b.max(1.0) {
            break;
        }
    }
    Ok(plan(a, false))
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-12 * (1.0 + b.abs()) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
