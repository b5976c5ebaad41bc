//! Exact Kolmogorov distances and smoothed CDF discrepancies.

use crate::dist::DiscreteDist;
use crate::error::{LabError, Result};
use crate::kernel::Kernel;
use crate::normal::{normal_cdf, normal_pdf};
use crate::quadrature::{integrate_breaks, QuadOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupSide {
    /// Attained by the right-continuous value F(a).
    AtAtom,
    /// Attained by the left limit F(a−).
    LeftLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub distance: f64,
    pub arg_sup: f64,
    pub side: SupSide,
    /// Probability mass dropped by pruning; the true distance lies within
    /// `distance ± error_bar`.
    pub error_bar: f64,
}

struct Best {
    value: f64,
    at: f64,
    side: SupSide,
}

impl Best {
    fn new() -> Self {
        Self {
            value: f64::NEG_INFINITY,
            at: 0.0,
            side: SupSide::AtAtom,
        }
    }

    // strict comparison: ties keep the earlier (smaller a, left side first)
    fn offer(&mut self, value: f64, at: f64, side: SupSide) {
        if value > self.value {
            *self = Self { value, at, side };
        }
    }
}

/// sup_a |P{X ≤ a} − Φ(a)|, exactly.
///
/// Between consecutive atoms F_X is constant while Φ is increasing, so on
/// each gap the difference is monotone and its supremum is approached at
/// an endpoint: either F(x_i) against Φ(x_i) just right of an atom, or the
/// left limit F(x_i−) against Φ(x_i). At ±∞ both CDFs agree. Hence it is
/// enough to test both sides of every atom.
pub fn kolmogorov_vs_normal(d: &DiscreteDist) -> DistanceReport {
    let mut best = Best::new();
    let mut below = 0.0;
    for (&x, &cum) in d.points().iter().zip(d.cumulative()) {
        let phi = normal_cdf(x);
        best.offer((below - phi).abs(), x, SupSide::LeftLimit);
        best.offer((cum - phi).abs(), x, SupSide::AtAtom);
        below = cum;
    }
    DistanceReport {
        distance: best.value.max(0.0),
        arg_sup: best.at,
        side: best.side,
        error_bar: d.pruned_mass(),
    }
}

/// sup_a |F_1(a) − F_2(a)| over the union of both supports.
pub fn kolmogorov_discrete(d1: &DiscreteDist, d2: &DiscreteDist) -> DistanceReport {
    let mut xs: Vec<f64> = d1.points().iter().chain(d2.points()).copied().collect();
    xs.sort_unstable_by(f64::total_cmp);
    xs.dedup();
    let mut best = Best::new();
    for &x in &xs {
        best.offer((d1.cdf_left(x) - d2.cdf_left(x)).abs(), x, SupSide::LeftLimit);
        best.offer((d1.cdf(x) - d2.cdf(x)).abs(), x, SupSide::AtAtom);
    }
    DistanceReport {
        distance: best.value.max(0.0),
        arg_sup: best.at,
        side: best.side,
        error_bar: d1.pruned_mass() + d2.pruned_mass(),
    }
}

/// Absolute tolerance for the Gaussian expectation inside the smoothed
/// discrepancy.
pub const SMOOTHED_QUAD_TOL: f64 = 1e-9;
// Φ(−12) ≈ 2e−33, far below every tolerance used here.
const NORMAL_CUTOFF: f64 = 12.0;

/// E f((G − a)/ε) for G standard normal.
pub fn smoothed_normal_expectation(k: &Kernel, eps: f64, a: f64) -> Result<f64> {
    let mut breaks = vec![-NORMAL_CUTOFF];
    if a > -NORMAL_CUTOFF && a < NORMAL_CUTOFF {
        breaks.push(a);
    }
    breaks.push(NORMAL_CUTOFF);
    let r = integrate_breaks(
        |g| k.smoothed_indicator((g - a) / eps) * normal_pdf(g),
        &breaks,
        &QuadOptions::with_tol(SMOOTHED_QUAD_TOL),
    )?;
    // mass left of the cutoff, where f ≡ 1 to working precision
    Ok(r.value + normal_cdf(-NORMAL_CUTOFF))
}

/// E f((X − a)/ε) for a discrete law, as an exact finite sum.
pub fn smoothed_discrete_expectation(d: &DiscreteDist, k: &Kernel, eps: f64, a: f64) -> f64 {
    d.atoms().map(|(x, p)| p * k.smoothed_indicator((x - a) / eps)).sum()
}

/// E f((X − a)/ε) − E f((G − a)/ε).
pub fn smoothed_discrepancy(d: &DiscreteDist, k: &Kernel, eps: f64, a: f64) -> Result<f64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(LabError::BadParam(format!("eps must be positive, got {eps}")));
    }
    Ok(smoothed_discrete_expectation(d, k, eps, a) - smoothed_normal_expectation(k, eps, a)?)
}

const SUP_GRID_MAX_STEP: f64 = 0.01;
const SUP_GRID_MAX_POINTS: usize = 20_000;
const GOLDEN_TOL: f64 = 1e-6;

/// sup_a |E f((X − a)/ε) − E f((G − a)/ε)| and a maximizing a.
///
/// Dense scan over supp(X) ∪ [−8, 8], then golden-section refinement
/// inside the best cell.
pub fn sup_smoothed_discrepancy(d: &DiscreteDist, k: &Kernel, eps: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(LabError::BadParam(format!("eps must be positive, got {eps}")));
    }
    let lo = (-8.0f64).min(d.points()[0] - 1.0);
    let hi = 8.0f64.max(d.points()[d.len() - 1] + 1.0);
    let step = SUP_GRID_MAX_STEP.min(eps / 10.0).max((hi - lo) / SUP_GRID_MAX_POINTS as f64);
    let count = ((hi - lo) / step).ceil() as usize + 1;
    let grid: Vec<f64> = (0..count).map(|i| lo + i as f64 * step).collect();
    let vals: Vec<f64> = grid
        .par_iter()
        .map(|&a| smoothed_discrepancy(d, k, eps, a).map(f64::abs))
        .collect::<Result<_>>()?;
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for (i, &v) in vals.iter().enumerate() {
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let objective = |a: f64| smoothed_discrepancy(d, k, eps, a).map(f64::abs);
    let (mut left, mut right) = (
        grid[best_i.saturating_sub(1)],
        grid[(best_i + 1).min(count - 1)],
    );
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = right - inv_phi * (right - left);
    let mut e = left + inv_phi * (right - left);
    let mut fc = objective(c)?;
    let mut fe = objective(e)?;
    while right - left > GOLDEN_TOL {
        if fc >= fe {
            right = e;
            e = c;
            fe = fc;
            c = right - inv_phi * (right - left);
            fc = objective(c)?;
        } else {
            left = c;
            c = e;
            fc = fe;
            e = left + inv_phi * (right - left);
            fe = objective(e)?;
        }
    }
    let mut arg = grid[best_i];
    for (a, v) in [(c, fc), (e, fe)] {
        if v > best {
            best = v;
            arg = a;
        }
    }
    Ok((best, arg))
}
