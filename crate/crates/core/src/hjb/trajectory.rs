//! Euler–Maruyama paths of the CPA slack under a feedback policy or a
//! constant multiplier. Path `p` draws from random stream `p`, so two
//! controllers run with the same seed see the same Brownian increments.

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{HjbConfig, HjbSolution};
use crate::error::{Error, Result};
use crate::exec::{rng_stream, Execution};

#[derive(Debug, Clone, Copy)]
pub enum Controller<'a> {
    /// Feedback policy, read at the nearest slack node of the current time step.
    Policy(&'a HjbSolution),
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub x: f64,
    /// Multiplier applied from `t` to the next point; the last point repeats the previous one.
    pub alpha: f64,
    /// `∫ R(α) dt`: expected value, free of noise.
    pub cumulative_value: f64,
    pub cumulative_cost: f64,
    /// Realized value, including the action noise.
    pub realized_value: f64,
    /// `cumulative_cost / realized_value`, zero before any value is realized.
    pub empirical_cpa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub path: u64,
    /// Empty unless points were requested.
    pub points: Vec<TrajectoryPoint>,
    pub terminal_state: f64,
    pub feasible: bool,
    /// `max(0, −X_τ) · k`, reported as a nonnegative loss.
    pub terminal_penalty: f64,
    pub cumulative_value: f64,
    /// Steps at which the state was outside the slack grid (policy lookup clamped).
    pub grid_exits: usize,
    /// Sum of squared noise increments of the state.
    pub noise_quadratic_variation: f64,
}

pub fn simulate_trajectories(
    config: &HjbConfig,
    controller: Controller<'_>,
    x0: f64,
    n_paths: u64,
    seed: u64,
    store_points: bool,
    exec: Execution,
) -> Result<Vec<TrajectoryRecord>> {
    config.validate()?;
    if let Controller::Policy(sol) = controller {
        if sol.t_steps() != config.t_steps || sol.config.x_grid != config.x_grid {
            return Err(Error::invalid(
                "policy",
                "solution grid does not match the simulation config",
            ));
        }
    }
    if let Controller::Constant(a) = controller {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::invalid("alpha", format!("must be finite and >= 0, got {a}")));
        }
    }
    let f = config.rate_functions()?;
    let steps = config.t_steps;
    let dt = config.dt();
    let sqrt_dt = dt.sqrt();
    let t_cpa = config.target_cpa;
    let noise = config.effective_noise();

    let paths = exec.map_blocks(n_paths as usize, |p| {
        let mut rng = rng_stream(seed, p as u64);
        let mut x = x0;
        let (mut value, mut cost, mut realized, mut qv) = (0.0, 0.0, 0.0, 0.0);
        let mut exits = 0;
        let mut points = Vec::with_capacity(if store_points { steps + 1 } else { 0 });
        let mut alpha = 0.0;
        for k in 0..steps {
            alpha = match controller {
                Controller::Constant(a) => a,
                Controller::Policy(sol) => {
                    let (a, off) = sol.policy_nearest(k, x);
                    exits += usize::from(off);
                    a
                }
            };
            if store_points {
                points.push(point(k as f64 * dt, x, alpha, value, cost, realized));
            }
            let (r, c) = f.rates(alpha);
            let z: f64 = StandardNormal.sample(&mut rng);
            let shock = noise * t_cpa * r.sqrt() * sqrt_dt * z;
            x += (t_cpa * r - c) * dt + shock;
            value += r * dt;
            cost += c * dt;
            realized += r * dt + shock / t_cpa;
            qv += shock * shock;
        }
        if store_points {
            points.push(point(config.horizon, x, alpha, value, cost, realized));
        }
        TrajectoryRecord {
            path: p as u64,
            points,
            terminal_state: x,
            feasible: x >= 0.0,
            terminal_penalty: -config.terminal_penalty(x),
            cumulative_value: value,
            grid_exits: exits,
            noise_quadratic_variation: qv,
        }
    });
    Ok(paths)
}

fn point(t: f64, x: f64, alpha: f64, value: f64, cost: f64, realized: f64) -> TrajectoryPoint {
    TrajectoryPoint {
        t,
        x,
        alpha,
        cumulative_value: value,
        cumulative_cost: cost,
        realized_value: realized,
        empirical_cpa: if realized > 0.0 { cost / realized } else { 0.0 },
    }
}
