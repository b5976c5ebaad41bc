//! Exact laws of sums of independent finite-support random variables.
//!
//! Two routes produce the same atoms. The direct route forms every pairwise
//! sum, sorts and merges. When both operands live on a common arithmetic
//! lattice `origin + k·step`, the lattice route multiplies the dense
//! probability vectors instead, which keeps lattice sums free of rounding
//! drift in the points and avoids the sort.

use crate::dist::{normalize_atoms, DiscreteDist};
use crate::error::{LabError, Result};

/// Largest support a convolution may produce.
pub const DEFAULT_SUPPORT_CAP: usize = 2_000_000;
/// Largest probability mass a single pass may discard.
pub const DEFAULT_PRUNE_BUDGET: f64 = 1e-12;
/// Upper end of the admissible pruning threshold.
pub const MAX_PRUNE_TOL: f64 = 1e-9;

// Relative tolerance for recognising lattice points and equal steps.
const LATTICE_TOL: f64 = 1e-9;
const STEP_MATCH_TOL: f64 = 1e-12;
// Dense vectors larger than this multiple of the atom count are not worth it.
const MAX_LATTICE_FILL: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolveOptions {
    /// Atoms with probability below this are dropped (mass tracked).
    pub prune_tol: f64,
    pub prune_budget: f64,
    pub support_cap: usize,
    /// Allow the dense lattice route when both operands are lattices.
    pub lattice_fast_path: bool,
}

impl Default for ConvolveOptions {
    fn default() -> Self {
        Self {
            prune_tol: 0.0,
            prune_budget: DEFAULT_PRUNE_BUDGET,
            support_cap: DEFAULT_SUPPORT_CAP,
            lattice_fast_path: true,
        }
    }
}

impl ConvolveOptions {
    pub fn with_prune_tol(prune_tol: f64) -> Self {
        Self {
            prune_tol,
            ..Self::default()
        }
    }

    pub fn direct_only(mut self) -> Self {
        self.lattice_fast_path = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=MAX_PRUNE_TOL).contains(&self.prune_tol) {
            return Err(LabError::BadParam(format!(
                "prune_tol {} outside [0, {MAX_PRUNE_TOL}]",
                self.prune_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Lattice {
    origin: f64,
    step: f64,
}

impl Lattice {
    fn index(&self, x: f64) -> usize {
        ((x - self.origin) / self.step).round() as usize
    }
}

fn detect_lattice(d: &DiscreteDist) -> Option<Lattice> {
    let pts = d.points();
    if pts.len() < 2 {
        return None;
    }
    let min_gap = pts.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let span = pts[pts.len() - 1] - pts[0];
    let cells = (span / min_gap).round();
    if !(cells >= 1.0) || cells as usize > MAX_LATTICE_FILL * pts.len() {
        return None;
    }
    // span/cells is more accurate than any single gap
    let lat = Lattice {
        origin: pts[0],
        step: span / cells,
    };
    let ok = pts.iter().all(|&x| {
        let k = ((x - lat.origin) / lat.step).round();
        (x - (lat.origin + k * lat.step)).abs() <= LATTICE_TOL * lat.step
    });
    ok.then_some(lat)
}

/// Mass missing from the product of two (possibly pruned) laws.
fn combined_pruned(a: &DiscreteDist, b: &DiscreteDist) -> f64 {
    let (p, q) = (a.pruned_mass(), b.pruned_mass());
    p + q - p * q
}

/// Drop atoms below `prune_tol` unless that would exceed the budget.
fn prune(points: Vec<f64>, probs: Vec<f64>, opts: &ConvolveOptions) -> (Vec<f64>, Vec<f64>, f64) {
    if opts.prune_tol <= 0.0 {
        return (points, probs, 0.0);
    }
    let dropped: f64 = probs.iter().filter(|&&p| p < opts.prune_tol).sum();
    if dropped == 0.0 || dropped > opts.prune_budget {
        return (points, probs, 0.0);
    }
    let (points, probs): (Vec<f64>, Vec<f64>) = points
        .into_iter()
        .zip(probs)
        .filter(|&(_, p)| p >= opts.prune_tol)
        .unzip();
    (points, probs, dropped)
}

fn finish(
    points: Vec<f64>,
    probs: Vec<f64>,
    inherited: f64,
    opts: &ConvolveOptions,
) -> Result<DiscreteDist> {
    let (points, probs, dropped) = prune(points, probs, opts);
    if points.len() > opts.support_cap {
        return Err(LabError::SupportOverflow {
            atoms: points.len(),
            cap: opts.support_cap,
        });
    }
    if points.is_empty() {
        return Err(LabError::EmptySupport);
    }
    Ok(DiscreteDist::from_sorted(points, probs, inherited + dropped))
}

fn convolve_lattice(
    a: &DiscreteDist,
    la: Lattice,
    b: &DiscreteDist,
    lb: Lattice,
    opts: &ConvolveOptions,
) -> Result<DiscreteDist> {
    let step = la.step;
    let dense = |d: &DiscreteDist, l: Lattice| {
        let len = l.index(d.points()[d.len() - 1]) + 1;
        let mut v = vec![0.0; len];
        for (x, p) in d.atoms() {
            v[l.index(x)] += p;
        }
        v
    };
    let va = dense(a, la);
    let vb = dense(b, lb);
    let len = va.len() + vb.len() - 1;
    if len > opts.support_cap {
        return Err(LabError::SupportOverflow {
            atoms: len,
            cap: opts.support_cap,
        });
    }
    // fixed summation order: outer index over `va`
    let mut out = vec![0.0; len];
    for (i, &p) in va.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (o, &q) in out[i..i + vb.len()].iter_mut().zip(&vb) {
            *o += p * q;
        }
    }
    let origin = la.origin + lb.origin;
    let (points, probs): (Vec<f64>, Vec<f64>) = out
        .into_iter()
        .enumerate()
        .filter(|&(_, p)| p > 0.0)
        .map(|(k, p)| (origin + k as f64 * step, p))
        .unzip();
    finish(points, probs, combined_pruned(a, b), opts)
}

fn convolve_direct(a: &DiscreteDist, b: &DiscreteDist, opts: &ConvolveOptions) -> Result<DiscreteDist> {
    let pairs = a.len().saturating_mul(b.len());
    if pairs > opts.support_cap.saturating_mul(16) {
        return Err(LabError::SupportOverflow {
            atoms: pairs,
            cap: opts.support_cap,
        });
    }
    let mut atoms = Vec::with_capacity(pairs);
    for (x, p) in a.atoms() {
        for (y, q) in b.atoms() {
            atoms.push((x + y, p * q));
        }
    }
    let (points, probs) = normalize_atoms(atoms);
    finish(points, probs, combined_pruned(a, b), opts)
}

/// Law of X + Y for independent X ~ `a`, Y ~ `b`.
pub fn convolve(a: &DiscreteDist, b: &DiscreteDist, opts: &ConvolveOptions) -> Result<DiscreteDist> {
    opts.validate()?;
    if opts.lattice_fast_path {
        if let (Some(la), Some(lb)) = (detect_lattice(a), detect_lattice(b)) {
            if (la.step - lb.step).abs() <= STEP_MATCH_TOL * la.step {
                return convolve_lattice(a, la, b, lb, opts);
            }
        }
    }
    convolve_direct(a, b, opts)
}

/// Law of X_1 + ... + X_n for i.i.d. copies of `d`, by square-and-multiply.
pub fn sum_iid(d: &DiscreteDist, n: u64, opts: &ConvolveOptions) -> Result<DiscreteDist> {
    if n == 0 {
        return Err(LabError::BadParam("sum_iid needs n >= 1".into()));
    }
    opts.validate()?;
    let mut acc: Option<DiscreteDist> = None;
    let mut base = d.clone();
    let mut k = n;
    loop {
        if k & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(cur) => convolve(&cur, &base, opts)?,
            });
        }
        k >>= 1;
        if k == 0 {
            break;
        }
        base = convolve(&base, &base, opts)?;
    }
    Ok(acc.expect("n >= 1"))
}

/// Law of the sum of independent summands, folded left to right.
pub fn sum_independent(ds: &[DiscreteDist], opts: &ConvolveOptions) -> Result<DiscreteDist> {
    let (first, rest) = ds.split_first().ok_or(LabError::EmptySupport)?;
    opts.validate()?;
    rest.iter().try_fold(first.clone(), |acc, d| convolve(&acc, d, opts))
}

/// `n` copies of `Y/√n` where `Y` is `d` standardized; the summands of the
/// normalized sums `(Y_1 + ... + Y_n)/√n`.
pub fn normalized_summand(d: &DiscreteDist, n: u64) -> Result<DiscreteDist> {
    if n == 0 {
        return Err(LabError::BadParam("n must be >= 1".into()));
    }
    d.standardize()?.scale(1.0 / (n as f64).sqrt())
}
