use serde::Serialize;

use super::{GridSpec, HjbConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Value function and feedback policy on the `(t, x)` grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HjbSolution {
    pub config: HjbConfig,
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    /// Row-major `(t_steps + 1) × nx`; row `n` is time `t[n]`.
    pub value: Vec<f64>,
    /// Row-major `t_steps × nx`; the multiplier applied on `[t[n], t[n + 1])`.
    pub policy: Vec<f64>,
}

impl HjbSolution {
    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn t_steps(&self) -> usize {
        self.t.len() - 1
    }

    pub fn value_at(&self, t_index: usize, x_index: usize) -> f64 {
        self.value[t_index * self.nx() + x_index]
    }

    pub fn value_slice(&self, t_index: usize) -> &[f64] {
        &self.value[t_index * self.nx()..(t_index + 1) * self.nx()]
    }

    pub fn policy_at(&self, t_index: usize, x_index: usize) -> f64 {
        self.policy[t_index * self.nx() + x_index]
    }

    pub fn policy_slice(&self, t_index: usize) -> &[f64] {
        &self.policy[t_index * self.nx()..(t_index + 1) * self.nx()]
    }

    /// Policy at the grid node nearest to `x` (clamped), and whether `x` was off-grid.
    pub fn policy_nearest(&self, t_index: usize, x: f64) -> (f64, bool) {
        let g = self.config.x_grid;
        let off = x < g.min || x > g.max;
        (self.policy_at(t_index, g.nearest(x)), off)
    }

    /// Central estimate of `V_x` (the costate) at the node nearest to `x`.
    pub fn v_x(&self, t_index: usize, x: f64) -> f64 {
        let g = self.config.x_grid;
        let i = g.nearest(x).clamp(1, self.nx() - 2);
        (self.value_at(t_index, i + 1) - self.value_at(t_index, i - 1)) / (2.0 * g.spacing())
    }

    /// Central estimate of `V_xx` at the node nearest to `x`.
    pub fn v_xx(&self, t_index: usize, x: f64) -> f64 {
        let g = self.config.x_grid;
        let i = g.nearest(x).clamp(1, self.nx() - 2);
        let dx = g.spacing();
        (self.value_at(t_index, i + 1) - 2.0 * self.value_at(t_index, i) + self.value_at(t_index, i - 1)) / (dx * dx)
    }
}

const X_CHUNK: usize = 256;

/// Backward explicit sweep: upwind first derivative, centered second
/// derivative, pointwise sup over the multiplier grid. At the edges of the
/// slack grid the value is extended linearly (one-sided slope, zero curvature).
pub fn solve(config: &HjbConfig, exec: Execution) -> Result<HjbSolution> {
    config.validate()?;
    config.check_cfl()?;
    let f = config.rate_functions()?;
    let xg: GridSpec = config.x_grid;
    let nx = xg.nodes();
    let nt = config.t_steps;
    let dx = xg.spacing();
    let dt = config.dt();
    let t_cpa = config.target_cpa;
    let s2 = config.effective_noise().powi(2);

    // (α, R, drift, diffusion) per grid multiplier.
    let controls: Vec<(f64, f64, f64, f64)> = config
        .alpha_grid
        .points()
        .into_iter()
        .map(|alpha| {
            let (r, c) = f.rates(alpha);
            (alpha, r, t_cpa * r - c, 0.5 * s2 * t_cpa * t_cpa * r)
        })
        .collect();

    let x = xg.points();
    let t: Vec<f64> = (0..=nt).map(|n| config.horizon * n as f64 / nt as f64).collect();
    let mut value = vec![0.0; (nt + 1) * nx];
    let mut policy = vec![0.0; nt * nx];
    for (i, &xi) in x.iter().enumerate() {
        value[nt * nx + i] = config.terminal_penalty(xi);
    }

    let chunks = nx.div_ceil(X_CHUNK);
    for n in (0..nt).rev() {
        let (head, tail) = value.split_at_mut((n + 1) * nx);
        let next = &tail[..nx];
        let updated = exec.map_blocks(chunks, |c| {
            let start = c * X_CHUNK;
            let end = (start + X_CHUNK).min(nx);
            (start..end)
                .map(|i| {
                    let vi = next[i];
                    let fwd = if i + 1 < nx {
                        (next[i + 1] - vi) / dx
                    } else {
                        (vi - next[i - 1]) / dx
                    };
                    let bwd = if i > 0 { (vi - next[i - 1]) / dx } else { fwd };
                    let curv = if i > 0 && i + 1 < nx {
                        (next[i + 1] - 2.0 * vi + next[i - 1]) / (dx * dx)
                    } else {
                        0.0
                    };
                    let mut best = f64::NEG_INFINITY;
                    let mut best_alpha = controls[0].0;
                    for &(alpha, r, drift, diff) in &controls {
                        let grad = if drift >= 0.0 { fwd } else { bwd };
                        let h = drift * grad + diff * curv + r;
                        // Ties go to the larger multiplier.
                        if h >= best {
                            best = h;
                            best_alpha = alpha;
                        }
                    }
                    (vi + dt * best, best_alpha)
                })
                .collect::<Vec<_>>()
        });
        let row = &mut head[n * nx..];
        for (i, (v, a)) in updated.into_iter().flatten().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    t_index: n,
                    x_index: i,
                    x: x[i],
                });
            }
            row[i] = v;
            policy[n * nx + i] = a;
        }
    }

    Ok(HjbSolution {
        config: *config,
        x,
        t,
        value,
        policy,
    })
}
