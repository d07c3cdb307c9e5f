//! Competition factor `γ(F, n)`: the ratio of expected price to beat to
//! expected value on won auctions when all `n` bidders bid truthfully.
//! Equivalently `γ = E Y₂⁽ⁿ⁾ / E Y₁⁽ⁿ⁾`, and the symmetric constrained
//! equilibrium bid is `(T / γ)·v`.

use serde::Serialize;

use crate::distributions::ValueDistribution;
use crate::error::{Error, Result};
use crate::exec::{block_plan, ratio_std_error, rng_stream, CompensatedSum, Execution, Moments, DEFAULT_BLOCK_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompetitionMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl CompetitionMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CompetitionMethod::ClosedForm => "closed-form",
            CompetitionMethod::Quadrature => "quadrature",
            CompetitionMethod::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompetitionFactorResult {
    pub gamma: f64,
    pub method: CompetitionMethod,
    pub n: usize,
    /// Zero for analytic methods.
    pub std_error: f64,
    pub samples: u64,
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::invalid("n", format!("need at least two bidders, got {n}")))
    } else {
        Ok(())
    }
}

/// `γ(a, n) = (n − 1)((an + 1)/(a(n − 1) + 1) − 1)` for `F(v) = v^a`.
pub fn gamma_power_closed_form(a: f64, n: usize) -> Result<f64> {
    check_n(n)?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::invalid("a", format!("must be finite and > 0, got {a}")));
    }
    let nf = n as f64;
    Ok((nf - 1.0) * ((a * nf + 1.0) / (a * (nf - 1.0) + 1.0) - 1.0))
}

fn gamma_from_maxima(n: usize, max_prev: f64, max_n: f64) -> f64 {
    let nf = n as f64;
    nf * (max_prev / max_n - (nf - 1.0) / nf)
}

/// `γ = n(v₁⁽ⁿ⁻¹⁾ / v₁⁽ⁿ⁾ − (n − 1)/n)` from the expected maxima.
pub fn gamma_order_stat(dist: &ValueDistribution, n: usize) -> Result<CompetitionFactorResult> {
    check_n(n)?;
    dist.validate()?;
    let gamma = gamma_from_maxima(n, dist.expected_max(n - 1)?, dist.expected_max(n)?);
    let method = if dist.has_closed_form_max(n) {
        CompetitionMethod::ClosedForm
    } else {
        CompetitionMethod::Quadrature
    };
    Ok(CompetitionFactorResult {
        gamma,
        method,
        n,
        std_error: 0.0,
        samples: 0,
    })
}

/// Same formula with every expected maximum computed by direct quadrature.
pub fn gamma_quadrature(dist: &ValueDistribution, n: usize) -> Result<CompetitionFactorResult> {
    check_n(n)?;
    dist.validate()?;
    let gamma = gamma_from_maxima(
        n,
        dist.expected_max_quadrature(n - 1)?,
        dist.expected_max_quadrature(n)?,
    );
    Ok(CompetitionFactorResult {
        gamma,
        method: CompetitionMethod::Quadrature,
        n,
        std_error: 0.0,
        samples: 0,
    })
}

#[derive(Debug, Clone, Default)]
struct GammaAcc {
    count: u64,
    wins: u64,
    cost: Moments,
    value: Moments,
    cross: CompensatedSum,
    gap: Moments,
}

impl GammaAcc {
    fn merge(&mut self, o: &GammaAcc) {
        self.count += o.count;
        self.wins += o.wins;
        self.cost.merge(&o.cost);
        self.value.merge(&o.value);
        self.cross.merge(&o.cross);
        self.gap.merge(&o.gap);
    }
}

fn sample_gamma(dist: &ValueDistribution, n: usize, samples: u64, seed: u64, exec: Execution) -> GammaAcc {
    let plan = block_plan(samples, DEFAULT_BLOCK_LEN);
    let blocks = exec.map_blocks(plan.len(), |i| {
        let (block, len) = plan[i];
        let mut rng = rng_stream(seed, block);
        let mut acc = GammaAcc {
            count: len,
            ..Default::default()
        };
        for _ in 0..len {
            let v = dist.sample(&mut rng);
            let mut beat = 0.0f64;
            for _ in 1..n {
                beat = beat.max(dist.sample(&mut rng));
            }
            // Ties count as losses.
            if v > beat {
                acc.wins += 1;
                acc.cost.push(beat);
                acc.value.push(v);
                acc.cross.add(beat * v);
                acc.gap.push(v - beat);
            } else {
                acc.cost.push(0.0);
                acc.value.push(0.0);
            }
        }
        acc
    });
    let mut total = GammaAcc::default();
    blocks.iter().for_each(|b| total.merge(b));
    total
}

/// Estimates `γ ≈ Cost / Value`, where each sample draws `v` and the max of
/// `n − 1` opponent values `v⁻`, and a win (`v > v⁻`) adds `v⁻` to Cost and
/// `v` to Value. The standard error is from the delta method.
pub fn gamma_monte_carlo(
    dist: &ValueDistribution,
    n: usize,
    samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<CompetitionFactorResult> {
    check_n(n)?;
    dist.validate()?;
    if samples == 0 {
        return Err(Error::invalid("samples", "need at least one sample"));
    }
    let acc = sample_gamma(dist, n, samples, seed, exec);
    if acc.wins == 0 {
        return Err(Error::DegenerateEstimate(format!(
            "no sample out of {samples} beat the competition"
        )));
    }
    let cost = acc.cost.sum.value();
    let value = acc.value.sum.value();
    Ok(CompetitionFactorResult {
        gamma: cost / value,
        method: CompetitionMethod::MonteCarlo,
        n,
        std_error: ratio_std_error(
            acc.count,
            cost,
            value,
            acc.cost.sum_sq.value(),
            acc.value.sum_sq.value(),
            acc.cross.value(),
        ),
        samples,
    })
}

/// Estimate and standard error of `1 − E(v − Y | v > Y) / v₁⁽ⁿ⁾`, with `Y` the
/// max of `n − 1` opponents and `v₁⁽ⁿ⁾` computed analytically.
pub fn gamma_conditional_gap_monte_carlo(
    dist: &ValueDistribution,
    n: usize,
    samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<(f64, f64)> {
    check_n(n)?;
    let acc = sample_gamma(dist, n, samples, seed, exec);
    if acc.wins == 0 {
        return Err(Error::DegenerateEstimate("no winning samples".into()));
    }
    let max_n = dist.expected_max(n)?;
    let gap_mean = acc.gap.mean(acc.wins);
    let gap_se = acc.gap.std_error(acc.wins);
    Ok((1.0 - gap_mean / max_n, gap_se / max_n))
}

/// How [`gamma_sweep`] computes each row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepMethod {
    Analytic,
    Quadrature,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaRow {
    pub family: &'static str,
    pub param: f64,
    pub n: usize,
    pub result: Result<CompetitionFactorResult>,
}

/// `γ` over every distribution and bidder count. Failures are kept per row.
pub fn gamma_sweep(
    dists: &[ValueDistribution],
    ns: &[usize],
    method: SweepMethod,
    exec: Execution,
) -> Result<Vec<GammaRow>> {
    if dists.is_empty() || ns.is_empty() {
        return Err(Error::invalid("sweep", "distribution and n lists must be nonempty"));
    }
    let mut rows = Vec::with_capacity(dists.len() * ns.len());
    for d in dists {
        for &n in ns {
            let result = match method {
                SweepMethod::Analytic => gamma_order_stat(d, n),
                SweepMethod::Quadrature => gamma_quadrature(d, n),
                SweepMethod::MonteCarlo { samples, seed } => gamma_monte_carlo(d, n, samples, seed, exec),
            };
            rows.push(GammaRow {
                family: d.family(),
                param: d.primary_param(),
                n,
                result,
            });
        }
    }
    Ok(rows)
}
