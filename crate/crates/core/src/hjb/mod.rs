//! Dynamic CPA-constrained bidder.
//!
//! The bidder controls a multiplier `α_t` over a horizon `τ`. Value accrues at
//! rate `R(α)` and the CPA slack `X` (T × value − cost) evolves as
//!
//! ```text
//! dX = (T R(α) − C(α)) dt + s · T √R(α) dW
//! ```
//!
//! with `s = 1` when noise is on. The terminal penalty is
//! `K(x) = −k · max(0, −x)`. The value function solves
//!
//! ```text
//! V_t + sup_α [ (T R − C) V_x + (s² T² / 2) R V_xx + R ] = 0,   V(τ, ·) = K
//! ```
//!
//! which [`solve`] integrates backward with an explicit upwind scheme.

mod plan;
mod rates;
mod solver;
mod trajectory;

pub use plan::{deterministic_plan, DeterministicPlan};
pub use rates::{rates, RateFunctions};
pub use solver::{solve, HjbSolution};
pub use trajectory::{simulate_trajectories, Controller, TrajectoryPoint, TrajectoryRecord};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid with `steps` intervals between `min` and `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn new(min: f64, max: f64, steps: usize) -> Self {
        GridSpec { min, max, steps }
    }

    pub fn nodes(&self) -> usize {
        self.steps + 1
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / self.steps as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i == self.steps {
            self.max
        } else {
            self.min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.nodes()).map(|i| self.point(i)).collect()
    }

    /// Index of the node nearest to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let i = ((x - self.min) / self.spacing()).round();
        if i.is_nan() || i <= 0.0 {
            0
        } else {
            (i as usize).min(self.steps)
        }
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::invalid(name, "grid needs at least one step"));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.max > self.min) {
            return Err(Error::invalid(
                name,
                format!("need finite min < max, got [{}, {}]", self.min, self.max),
            ));
        }
        Ok(())
    }
}

fn default_noise_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HjbConfig {
    /// Target CPA `T`.
    pub target_cpa: f64,
    /// Exponent `a` of the price-to-beat CDF `t^a`.
    pub price_exponent: f64,
    /// Horizon `τ`.
    pub horizon: f64,
    pub x_grid: GridSpec,
    pub t_steps: usize,
    pub alpha_grid: GridSpec,
    /// Slope `k` of the terminal penalty `−k·max(0, −x)`.
    pub penalty_slope: f64,
    pub noise_on: bool,
    /// Multiplies the diffusion coefficient; for sensitivity runs only.
    #[serde(default = "default_noise_scale")]
    pub noise_scale: f64,
}

impl Default for HjbConfig {
    /// `T = 0.8`, `a = 1`, `τ = 1`, slack grid `[−2, 2]` with 200 steps,
    /// multipliers `[0, 5]` in steps of 0.05 and penalty slope 10. The time
    /// grid is the coarsest one that satisfies the stability bound.
    fn default() -> Self {
        let mut cfg = HjbConfig {
            target_cpa: 0.8,
            price_exponent: 1.0,
            horizon: 1.0,
            x_grid: GridSpec::new(-2.0, 2.0, 200),
            t_steps: 1,
            alpha_grid: GridSpec::new(0.0, 5.0, 100),
            penalty_slope: 10.0,
            noise_on: true,
            noise_scale: 1.0,
        };
        cfg.t_steps = cfg.min_stable_t_steps();
        cfg
    }
}

impl HjbConfig {
    pub fn rate_functions(&self) -> Result<RateFunctions> {
        RateFunctions::new(self.price_exponent)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_cpa > 0.0 && self.target_cpa.is_finite()) {
            return Err(Error::invalid(
                "target_cpa",
                format!("must be finite and > 0, got {}", self.target_cpa),
            ));
        }
        RateFunctions::new(self.price_exponent)?;
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid(
                "horizon",
                format!("must be finite and >= 0, got {}", self.horizon),
            ));
        }
        self.x_grid.validate("x_grid")?;
        self.alpha_grid.validate("alpha_grid")?;
        if !(self.x_grid.min < 0.0 && self.x_grid.max > 0.0) {
            return Err(Error::invalid("x_grid", "slack range must bracket 0"));
        }
        if self.alpha_grid.min < 0.0 {
            return Err(Error::invalid("alpha_grid", "multipliers must be >= 0"));
        }
        if self.t_steps == 0 {
            return Err(Error::invalid("t_steps", "need at least one time step"));
        }
        if !(self.penalty_slope >= 0.0 && self.penalty_slope.is_finite()) {
            return Err(Error::invalid(
                "penalty_slope",
                format!("must be finite and >= 0, got {}", self.penalty_slope),
            ));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::invalid(
                "noise_scale",
                format!("must be finite and >= 0, got {}", self.noise_scale),
            ));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.t_steps as f64
    }

    /// Diffusion multiplier `s` applied to `T √R dW`.
    pub fn effective_noise(&self) -> f64 {
        if self.noise_on {
            self.noise_scale
        } else {
            0.0
        }
    }

    pub fn terminal_penalty(&self, x: f64) -> f64 {
        -self.penalty_slope * (-x).max(0.0)
    }

    /// Largest stable time step of the explicit scheme:
    /// `dt ≤ 1 / (max|drift| / dx + max(s² T² R) / dx²)`.
    pub fn max_stable_dt(&self) -> f64 {
        let f = RateFunctions { a: self.price_exponent };
        let dx = self.x_grid.spacing();
        let s2 = self.effective_noise().powi(2);
        let (mut drift_max, mut diff_max) = (0.0f64, 0.0f64);
        for alpha in self.alpha_grid.points() {
            let (r, c) = f.rates(alpha);
            drift_max = drift_max.max((self.target_cpa * r - c).abs());
            diff_max = diff_max.max(s2 * self.target_cpa * self.target_cpa * r);
        }
        let rate = drift_max / dx + diff_max / (dx * dx);
        if rate > 0.0 {
            1.0 / rate
        } else {
            f64::INFINITY
        }
    }

    pub fn min_stable_t_steps(&self) -> usize {
        let dt_max = self.max_stable_dt();
        if !dt_max.is_finite() || self.horizon == 0.0 {
            return 1;
        }
        ((self.horizon / dt_max) * (1.0 + 1e-9)).ceil().max(1.0) as usize
    }

    pub fn check_cfl(&self) -> Result<()> {
        let dt = self.dt();
        let dt_max = self.max_stable_dt();
        if dt > dt_max * (1.0 + 1e-12) {
            return Err(Error::Cfl {
                dt,
                dt_max,
                suggested_t_steps: self.min_stable_t_steps(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_stable() {
        let cfg = HjbConfig::default();
        cfg.validate().unwrap();
        cfg.check_cfl().unwrap();
    }

    #[test]
    fn cfl_violation_suggests_steps() {
        let cfg = HjbConfig {
            t_steps: 10,
            ..HjbConfig::default()
        };
        match cfg.check_cfl() {
            Err(Error::Cfl { suggested_t_steps, .. }) => {
                let fixed = HjbConfig {
                    t_steps: suggested_t_steps,
                    ..cfg
                };
                fixed.check_cfl().unwrap();
            }
            other => panic!("expected CFL error, got {other:?}"),
        }
    }

    #[test]
    fn grid_validation() {
        let bad = HjbConfig {
            x_grid: GridSpec::new(0.5, 2.0, 10),
            ..HjbConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = HjbConfig {
            alpha_grid: GridSpec::new(-1.0, 2.0, 10),
            ..HjbConfig::default()
        };
        assert!(bad.validate().is_err());
        let g = GridSpec::new(-1.0, 1.0, 4);
        assert_eq!(g.points(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(g.nearest(0.3), 3);
        assert_eq!(g.nearest(-7.0), 0);
        assert_eq!(g.nearest(7.0), 4);
    }
}
