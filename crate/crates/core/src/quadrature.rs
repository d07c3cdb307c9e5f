//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! error estimate falls below `max(abs_tol, rel_tol * |integral|)`. Kinks in
//! the integrand (bids crossing the end of a support) are handled by
//! subdivision; pass known breakpoints to [`integrate_with_breaks`] when they
//! are available.

use crate::error::{Error, Result};

/// Relative tolerance used across the crate for moment and CPA integrals.
pub const REL_TOL: f64 = 1e-10;
/// Absolute floor under which integrals are considered converged.
pub const ABS_TOL: f64 = 1e-14;

/// Absolute tolerance of [`integrate_nonnegative`], as a fraction of the integral's scale.
pub const SCALED_ABS_TOL: f64 = 1e-22;
/// Relative error accepted from [`integrate_nonnegative`] once refinement stalls.
pub const STALL_REL_TOL: f64 = 1e-8;

const MAX_SEGMENTS: usize = 4000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[lo, hi]` to the crate-wide tolerances.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<f64> {
    integrate_with_breaks(f, lo, hi, &[])
}

/// Like [`integrate`], starting from a partition at the given interior points.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, breaks: &[f64]) -> Result<f64> {
    integrate_tol(f, lo, hi, breaks, REL_TOL, ABS_TOL)
}

/// For `f ≥ 0` whose integral is naturally of size `scale`: the absolute tolerance is
/// `SCALED_ABS_TOL * scale`, so integrals far below `ABS_TOL` keep their precision.
/// Rounding in `f` can stall refinement; the estimate is then kept if within [`STALL_REL_TOL`].
pub fn integrate_nonnegative<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, breaks: &[f64], scale: f64) -> Result<f64> {
    match integrate_tol(f, lo, hi, breaks, REL_TOL, SCALED_ABS_TOL * scale.abs()) {
        Err(Error::Quadrature {
            estimate,
            error_estimate,
            ..
        }) if error_estimate <= STALL_REL_TOL * estimate.abs() => Ok(estimate),
        other => other,
    }
}

pub fn integrate_tol<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::invalid(
            "quadrature bounds",
            format!("bounds must be finite, got [{lo}, {hi}]"),
        ));
    }
    if hi == lo {
        return Ok(0.0);
    }
    if hi < lo {
        return integrate_tol(f, hi, lo, breaks, rel_tol, abs_tol).map(|v| -v);
    }

    let mut points: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|b| b.is_finite() && *b > lo && *b < hi)
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut segments = Vec::with_capacity(64);
    let mut left = lo;
    for p in points.into_iter().chain(std::iter::once(hi)) {
        segments.push(kronrod(&f, left, p));
        left = p;
    }

    loop {
        let total: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature {
                lo,
                hi,
                estimate: total,
                error_estimate: error,
            });
        }
        if error <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .expect("at least one segment");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.lo + seg.hi);
        // Once segments shrink to rounding level nothing more can be gained.
        if segments.len() >= MAX_SEGMENTS || mid <= seg.lo || mid >= seg.hi {
            return Err(Error::Quadrature {
                lo,
                hi,
                estimate: total,
                error_estimate: error,
            });
        }
        segments.push(kronrod(&f, seg.lo, mid));
        segments.push(kronrod(&f, mid, seg.hi));
    }
}
