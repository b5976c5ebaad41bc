//! Finite-support distributions, their moments and the named families.

use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Points closer than `MERGE_TOL * max(1, |x|)` are treated as one atom.
pub const MERGE_TOL: f64 = 1e-14;

/// Accepted deviation of the input probability sum from 1.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// A probability distribution on finitely many real points.
///
/// Atoms are sorted strictly increasing and carry positive mass. Mass that
/// was discarded by pruning during convolution is kept in `pruned_mass`, so
/// `sum(probs) + pruned_mass == 1` up to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    points: Vec<f64>,
    probs: Vec<f64>,
    // cum[i] = probs[0] + ... + probs[i]
    cum: Vec<f64>,
    pruned_mass: f64,
}

/// Mean, variance and absolute third moment about zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mean: f64,
    pub variance: f64,
    /// E|X|³, taken about 0 rather than about the mean.
    pub abs3: f64,
}

impl MomentSummary {
    /// ρ = (E|X|³)^{1/3}.
    pub fn rho(&self) -> f64 {
        self.abs3.cbrt()
    }

    pub fn is_centered(&self, tol: f64) -> bool {
        self.mean.abs() <= tol
    }
}

/// Sort, merge near-coincident points and drop zero-mass atoms.
pub(crate) fn normalize_atoms(mut atoms: Vec<(f64, f64)>) -> (Vec<f64>, Vec<f64>) {
    atoms.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let mut points: Vec<f64> = Vec::with_capacity(atoms.len());
    let mut probs: Vec<f64> = Vec::with_capacity(atoms.len());
    for (x, p) in atoms {
        match points.last() {
            Some(&head) if (x - head).abs() <= MERGE_TOL * head.abs().max(1.0) => {
                *probs.last_mut().unwrap() += p;
            }
            _ => {
                points.push(x);
                probs.push(p);
            }
        }
    }
    let mut k = 0;
    for i in 0..points.len() {
        if probs[i] > 0.0 {
            points[k] = points[i];
            probs[k] = probs[i];
            k += 1;
        }
    }
    points.truncate(k);
    probs.truncate(k);
    (points, probs)
}

fn prefix_sums(probs: &[f64]) -> Vec<f64> {
    probs
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

impl DiscreteDist {
    /// Build a distribution from parallel point/probability lists.
    pub fn new(points: &[f64], probs: &[f64]) -> Result<Self> {
        if points.len() != probs.len() {
            return Err(LabError::BadParam(format!(
                "{} points but {} probabilities",
                points.len(),
                probs.len()
            )));
        }
        if points.is_empty() {
            return Err(LabError::EmptySupport);
        }
        if let Some(x) = points.iter().chain(probs).find(|v| !v.is_finite()) {
            return Err(LabError::NonFiniteInput(format!("{x}")));
        }
        if let Some(p) = probs.iter().find(|&&p| p < 0.0) {
            return Err(LabError::BadParam(format!("negative probability {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(LabError::ProbSumMismatch { sum });
        }
        let atoms = points.iter().copied().zip(probs.iter().copied()).collect();
        let (points, probs) = normalize_atoms(atoms);
        if points.is_empty() {
            return Err(LabError::EmptySupport);
        }
        Ok(Self::from_sorted(points, probs, 0.0))
    }

    pub fn point_mass(x: f64) -> Self {
        Self::from_sorted(vec![x], vec![1.0], 0.0)
    }

    /// Caller guarantees sorted, merged, positive atoms.
    pub(crate) fn from_sorted(points: Vec<f64>, probs: Vec<f64>, pruned_mass: f64) -> Self {
        debug_assert_eq!(points.len(), probs.len());
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        let cum = prefix_sums(&probs);
        Self {
            points,
            probs,
            cum,
            pruned_mass,
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn pruned_mass(&self) -> f64 {
        self.pruned_mass
    }

    /// Sum of the retained atom probabilities.
    pub fn total_mass(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0)
    }

    pub fn moments(&self) -> MomentSummary {
        let mean: f64 = self.atoms().map(|(x, p)| p * x).sum();
        let variance: f64 = self.atoms().map(|(x, p)| p * (x - mean) * (x - mean)).sum();
        let abs3: f64 = self.atoms().map(|(x, p)| p * (x * x * x).abs()).sum();
        MomentSummary {
            mean,
            variance,
            abs3,
        }
    }

    /// Law of c·X.
    pub fn scale(&self, c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(LabError::NonFiniteInput(format!("scale {c}")));
        }
        if c == 0.0 {
            return Err(LabError::ZeroScale);
        }
        let mut points: Vec<f64> = self.points.iter().map(|&x| c * x).collect();
        let mut probs = self.probs.clone();
        if c < 0.0 {
            points.reverse();
            probs.reverse();
        }
        Ok(Self::from_sorted(points, probs, self.pruned_mass))
    }

    /// Law of (X − mean)/sd.
    pub fn standardize(&self) -> Result<Self> {
        let m = self.moments();
        if !(m.variance > 0.0) {
            return Err(LabError::ZeroVariance);
        }
        let sd = m.variance.sqrt();
        let points = self.points.iter().map(|&x| (x - m.mean) / sd).collect();
        Ok(Self::from_sorted(points, self.probs.clone(), self.pruned_mass))
    }

    /// P{X ≤ x}.
    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.points.partition_point(|&p| p <= x);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }

    /// P{X < x}.
    pub fn cdf_left(&self, x: f64) -> f64 {
        let k = self.points.partition_point(|&p| p < x);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }

    /// Cumulative probabilities at the atoms, `cdf(points[i])`.
    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }
}

/// Convenience wrapper around [`DiscreteDist::new`].
pub fn make_discrete(points: &[f64], probs: &[f64]) -> Result<DiscreteDist> {
    DiscreteDist::new(points, probs)
}

/// Named mean-zero families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Rademacher,
    /// Bernoulli(p) minus p.
    CenteredBernoulli { p: f64 },
    /// Two points x1 < 0 < x2, weighted so the mean is zero.
    TwoPoint { x1: f64, x2: f64 },
    /// Uniform on m equally spaced points centered at zero.
    UniformLattice { m: u32 },
}

impl Family {
    pub fn build(&self) -> Result<DiscreteDist> {
        match *self {
            Family::Rademacher => DiscreteDist::new(&[-1.0, 1.0], &[0.5, 0.5]),
            Family::CenteredBernoulli { p } => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(LabError::BadParam(format!("bernoulli p = {p} not in (0,1)")));
                }
                DiscreteDist::new(&[-p, 1.0 - p], &[1.0 - p, p])
            }
            Family::TwoPoint { x1, x2 } => {
                if !(x1.is_finite() && x2.is_finite() && x1 < 0.0 && x2 > 0.0) {
                    return Err(LabError::BadParam(format!(
                        "two_point needs x1 < 0 < x2, got ({x1}, {x2})"
                    )));
                }
                // p1·x1 + p2·x2 = 0 with p1 + p2 = 1
                let span = x2 - x1;
                DiscreteDist::new(&[x1, x2], &[x2 / span, -x1 / span])
            }
            Family::UniformLattice { m } => {
                if m == 0 {
                    return Err(LabError::BadParam("uniform_lattice needs m >= 1".into()));
                }
                let center = (m as f64 - 1.0) / 2.0;
                let points: Vec<f64> = (0..m).map(|j| j as f64 - center).collect();
                let p = 1.0 / m as f64;
                let mut probs = vec![p; m as usize];
                // absorb rounding so the sum check is exact
                let rest: f64 = probs[1..].iter().sum();
                probs[0] = 1.0 - rest;
                DiscreteDist::new(&points, &probs)
            }
        }
    }

    /// Stable identifier used for sorting experiment cells and file names.
    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Rademacher => write!(f, "rademacher"),
            Family::CenteredBernoulli { p } => write!(f, "centered_bernoulli:{p}"),
            Family::TwoPoint { x1, x2 } => write!(f, "two_point:{x1}:{x2}"),
            Family::UniformLattice { m } => write!(f, "uniform_lattice:{m}"),
        }
    }
}

impl FromStr for Family {
    type Err = LabError;

    /// Parses `rademacher`, `centered_bernoulli:0.3`, `two_point:-2:1`,
    /// `uniform_lattice:5`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let name = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let num = |i: usize| -> Result<f64> {
            args.get(i)
                .ok_or_else(|| LabError::BadParam(format!("family `{s}` is missing a parameter")))?
                .parse::<f64>()
                .map_err(|e| LabError::BadParam(format!("family `{s}`: {e}")))
        };
        let arity = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(LabError::BadParam(format!("family `{s}` expects {n} parameter(s)")))
            }
        };
        let fam = match name {
            "rademacher" => {
                arity(0)?;
                Family::Rademacher
            }
            "centered_bernoulli" => {
                arity(1)?;
                Family::CenteredBernoulli { p: num(0)? }
            }
            "two_point" => {
                arity(2)?;
                Family::TwoPoint {
                    x1: num(0)?,
                    x2: num(1)?,
                }
            }
            "uniform_lattice" => {
                arity(1)?;
                let m = num(0)?;
                if m.fract() != 0.0 || m < 1.0 || m > u32::MAX as f64 {
                    return Err(LabError::BadParam(format!("uniform_lattice m = {m}")));
                }
                Family::UniformLattice { m: m as u32 }
            }
            other => return Err(LabError::BadParam(format!("unknown family `{other}`"))),
        };
        Ok(fam)
    }
}

/// JSON distribution spec: `{"family": "rademacher"}` or
/// `{"atoms": [[x, p], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistSpec {
    Family(Family),
    Atoms { atoms: Vec<[f64; 2]> },
}

impl DistSpec {
    pub fn build(&self) -> Result<DiscreteDist> {
        match self {
            DistSpec::Family(f) => f.build(),
            DistSpec::Atoms { atoms } => {
                let points: Vec<f64> = atoms.iter().map(|a| a[0]).collect();
                let probs: Vec<f64> = atoms.iter().map(|a| a[1]).collect();
                DiscreteDist::new(&points, &probs)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            DistSpec::Family(f) => f.name(),
            DistSpec::Atoms { atoms } => format!("atoms[{}]", atoms.len()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| LabError::BadParam(format!("distribution spec: {e}")))
    }
}

impl From<Family> for DistSpec {
    fn from(f: Family) -> Self {
        DistSpec::Family(f)
    }
}
