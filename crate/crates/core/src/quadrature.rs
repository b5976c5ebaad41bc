//! Adaptive Simpson quadrature with an absolute error target.
//!
//! The interval is first cut into equal panels that are integrated in
//! parallel; panel results are summed in panel order, so the value does not
//! depend on the number of worker threads.

use crate::error::{LabError, Result};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub initial_panels: usize,
    pub max_depth: u32,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            initial_panels: 16,
            max_depth: 50,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Sum of the per-panel Richardson error estimates.
    pub error_estimate: f64,
    pub evals: usize,
}

struct Panel {
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn refine<F: Fn(f64) -> f64>(
    f: &F,
    p: Panel,
    tol: f64,
    depth: u32,
    opts: &QuadOptions,
    out: &mut QuadResult,
) -> Result<()> {
    let lm = 0.5 * (p.a + p.m);
    let rm = 0.5 * (p.m + p.b);
    let flm = f(lm);
    let frm = f(rm);
    out.evals += 2;
    let left = simpson(p.a, p.m, p.fa, flm, p.fm);
    let right = simpson(p.m, p.b, p.fm, frm, p.fb);
    let delta = left + right - p.whole;
    let both = left + right;
    // stop when converged or when the tolerance is below what f64 can resolve
    let floor = 64.0 * f64::EPSILON * both.abs();
    let too_narrow = (p.b - p.a) <= 16.0 * f64::EPSILON * p.m.abs().max(1.0);
    if delta.abs() <= 15.0 * tol || 15.0 * tol <= floor || too_narrow {
        out.value += both + delta / 15.0;
        out.error_estimate += delta.abs() / 15.0;
        return Ok(());
    }
    if depth >= opts.max_depth {
        return Err(LabError::QuadratureDepthExceeded {
            a: p.a,
            b: p.b,
            max_depth: opts.max_depth,
        });
    }
    let lp = Panel {
        a: p.a,
        m: lm,
        b: p.m,
        fa: p.fa,
        fm: flm,
        fb: p.fm,
        whole: left,
    };
    let rp = Panel {
        a: p.m,
        m: rm,
        b: p.b,
        fa: p.fm,
        fm: frm,
        fb: p.fb,
        whole: right,
    };
    refine(f, lp, 0.5 * tol, depth + 1, opts, out)?;
    refine(f, rp, 0.5 * tol, depth + 1, opts, out)
}

fn panel_integral<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, opts: &QuadOptions) -> Result<QuadResult> {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let mut out = QuadResult {
        value: 0.0,
        error_estimate: 0.0,
        evals: 3,
    };
    let p = Panel {
        a,
        m,
        b,
        fa,
        fm,
        fb,
        whole: simpson(a, b, fa, fm, fb),
    };
    refine(f, p, tol, 0, opts, &mut out)?;
    Ok(out)
}

/// ∫_a^b f to roughly `opts.abs_tol` absolute error.
pub fn integrate<F>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    integrate_breaks(f, &[a, b], opts)
}

/// Like [`integrate`], but over consecutive sub-intervals of `breaks` so
/// that known kinks or fast transitions sit on panel boundaries.
pub fn integrate_breaks<F>(f: F, breaks: &[f64], opts: &QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    if breaks.len() < 2 || breaks.iter().any(|x| !x.is_finite()) {
        return Err(LabError::QuadratureFailure("need at least two finite break points".into()));
    }
    if !(opts.abs_tol > 0.0) || opts.initial_panels == 0 {
        return Err(LabError::QuadratureFailure("tolerance and panel count must be positive".into()));
    }
    let total: f64 = breaks.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    if total == 0.0 {
        return Ok(QuadResult {
            value: 0.0,
            error_estimate: 0.0,
            evals: 0,
        });
    }
    let mut panels = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == b {
            continue;
        }
        let k = opts.initial_panels;
        for i in 0..k {
            let lo = a + (b - a) * i as f64 / k as f64;
            let hi = if i + 1 == k { b } else { a + (b - a) * (i + 1) as f64 / k as f64 };
            panels.push((lo, hi));
        }
    }
    let results: Vec<QuadResult> = panels
        .par_iter()
        .map(|&(lo, hi)| {
            let share = opts.abs_tol * (hi - lo).abs() / total;
            panel_integral(&f, lo, hi, share, opts)
        })
        .collect::<Result<_>>()?;
    Ok(results.iter().fold(
        QuadResult {
            value: 0.0,
            error_estimate: 0.0,
            evals: 0,
        },
        |acc, r| QuadResult {
            value: acc.value + r.value,
            error_estimate: acc.error_estimate + r.error_estimate,
            evals: acc.evals + r.evals,
        },
    ))
}

/// Fixed midpoint rule with `n` cells; the brute-force reference used to
/// check the adaptive scheme.
pub fn midpoint<F>(f: F, a: f64, b: f64, n: usize) -> f64
where
    F: Fn(f64) -> f64 + Sync,
{
    let h = (b - a) / n as f64;
    let chunk = 4096;
    let parts: Vec<f64> = (0..n.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(n);
            (lo..hi).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>()
        })
        .collect();
    parts.iter().sum::<f64>() * h
}
