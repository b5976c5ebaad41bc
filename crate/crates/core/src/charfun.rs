//! Characteristic functions and remainder diagnostics for the quadratic
//! approximation `E e^{itX} ≈ exp(−σ²t²/2)`.
//!
//! Near `t = 0` the interesting quantities are tiny differences of numbers
//! close to 1, so everything here works with `z = φ(t) − 1` computed as
//! `Σ p (cos(tx) − 1) + i Σ p sin(tx)` with `cos − 1 = −2 sin²(·/2)`, and
//! with `log1p`/`expm1` in the complex plane.

use crate::dist::DiscreteDist;
use crate::error::{LabError, Result};
use crate::normal::normal_chf;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Symbolic characteristic function.
#[derive(Debug, Clone, PartialEq)]
pub enum ChfExpr {
    DiscreteAtoms(DiscreteDist),
    StandardNormal,
    /// Characteristic function of c·X.
    Scaled(f64, Box<ChfExpr>),
    ProductOfIndependent(Vec<ChfExpr>),
}

impl ChfExpr {
    pub fn product_of(ds: &[DiscreteDist]) -> Self {
        ChfExpr::ProductOfIndependent(ds.iter().cloned().map(ChfExpr::DiscreteAtoms).collect())
    }

    pub fn scaled(c: f64, inner: ChfExpr) -> Self {
        ChfExpr::Scaled(c, Box::new(inner))
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        if t == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        match self {
            ChfExpr::DiscreteAtoms(d) => Complex64::new(d.total_mass(), 0.0) + chf_minus_one(d, t),
            ChfExpr::StandardNormal => Complex64::new(normal_chf(t), 0.0),
            ChfExpr::Scaled(c, inner) => inner.eval(c * t),
            ChfExpr::ProductOfIndependent(parts) => {
                parts.iter().fold(Complex64::new(1.0, 0.0), |acc, e| acc * e.eval(t))
            }
        }
    }

    /// (mean, second moment about zero) of the underlying law.
    pub fn first_two_moments(&self) -> (f64, f64) {
        match self {
            ChfExpr::DiscreteAtoms(d) => {
                let mean: f64 = d.atoms().map(|(x, p)| p * x).sum();
                let second: f64 = d.atoms().map(|(x, p)| p * x * x).sum();
                (mean, second)
            }
            ChfExpr::StandardNormal => (0.0, 1.0),
            ChfExpr::Scaled(c, inner) => {
                let (m, s) = inner.first_two_moments();
                (c * m, c * c * s)
            }
            ChfExpr::ProductOfIndependent(parts) => {
                let mut mean = 0.0;
                let mut var = 0.0;
                for p in parts {
                    let (m, s) = p.first_two_moments();
                    mean += m;
                    var += s - m * m;
                }
                (mean, var + mean * mean)
            }
        }
    }
}

/// E e^{itX} for a discrete law, as a free function.
pub fn chf_eval(e: &ChfExpr, t: f64) -> Complex64 {
    e.eval(t)
}

/// φ(t) − 1 without cancellation.
pub fn chf_minus_one(d: &DiscreteDist, t: f64) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, p) in d.atoms() {
        let half = 0.5 * t * x;
        let s = half.sin();
        re -= 2.0 * p * s * s;
        im += p * (t * x).sin();
    }
    Complex64::new(re, im)
}

/// Principal log(1 + z), accurate for small |z|.
pub fn log1p_complex(z: Complex64) -> Complex64 {
    let w = 2.0 * z.re + z.norm_sqr();
    Complex64::new(0.5 * w.ln_1p(), z.im.atan2(1.0 + z.re))
}

/// log(1 + z) − z, without cancellation for small |z|.
pub fn log1p_minus_id(z: Complex64) -> Complex64 {
    if z.norm() >= 0.1 {
        return log1p_complex(z) - z;
    }
    // Σ_{k≥2} (−1)^{k+1} z^k / k; |z| < 0.1 makes 16 terms exact to 1e−17
    let mut pow = z * z;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 2..18 {
        let term = pow / k as f64;
        if k % 2 == 0 {
            sum -= term;
        } else {
            sum += term;
        }
        pow *= z;
    }
    sum
}

/// sin v − v, without cancellation for small |v|.
fn sin_minus_id(v: f64) -> f64 {
    if v.abs() >= 0.5 {
        return v.sin() - v;
    }
    // −v³/3! + v⁵/5! − ...; 10 terms reach 1e−20 relative at |v| = 1/2
    let v2 = v * v;
    let mut term = -v * v2 / 6.0;
    let mut sum = 0.0;
    for k in 1..11 {
        sum += term;
        term *= -v2 / ((2 * k + 2) * (2 * k + 3)) as f64;
    }
    sum
}

/// φ(t) − 1 − itm + t²s/2 with m the mean and s the second moment: the
/// part of the characteristic function beyond its quadratic Taylor
/// polynomial, summed atom by atom without cancellation.
pub fn chf_taylor2_defect(d: &DiscreteDist, t: f64) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, p) in d.atoms() {
        // cos v − 1 + v²/2 = 2(u² − sin²u) = −2(sin u − u)(sin u + u), u = v/2
        let v = t * x;
        let u = 0.5 * v;
        re -= 2.0 * p * sin_minus_id(u) * (u.sin() + u);
        im += p * sin_minus_id(v);
    }
    Complex64::new(re, im)
}

/// log φ(t) + σ²t²/2, assembled as (log(1+z) − z) + (z − itm + st²/2)
/// + itm − m²t²/2 with z = φ(t) − 1.
fn log_chf_remainder(d: &DiscreteDist, z: Complex64, mean: f64, t: f64) -> Complex64 {
    log1p_minus_id(z) + chf_taylor2_defect(d, t) + Complex64::new(-0.5 * mean * mean * t * t, mean * t)
}

/// e^z − 1, accurate for small |z|.
pub fn expm1_complex(z: Complex64) -> Complex64 {
    let (s, c) = z.im.sin_cos();
    let half = (0.5 * z.im).sin();
    // e^a cos b − 1 = expm1(a)·cos b + (cos b − 1)
    Complex64::new(z.re.exp_m1() * c - 2.0 * half * half, z.re.exp() * s)
}

/// Outcome of one remainder evaluation at a single t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderReport {
    pub t: f64,
    /// |log φ(t) + σ²t²/2| / (ρ³|t|³).
    pub theta_ratio: f64,
    /// σ²t²
    pub a: f64,
    /// ρ³t³
    pub b: f64,
    /// |t| ≤ 1/ρ
    pub in_range: bool,
    /// |φ(t) − 1|, the distance from the centre of the principal-log disk.
    pub z_modulus: f64,
}

// Moments of a summand must vanish to this relative accuracy.
const MEAN_ZERO_TOL: f64 = 1e-12;
// Rounding slack on the range test |t|·ρ ≤ 1.
const RANGE_SLACK: f64 = 1e-12;
/// Principal log is refused once |φ(t) − 1| reaches this.
pub const LOG_BRANCH_LIMIT: f64 = 0.999;

fn check_centered(d: &DiscreteDist) -> Result<crate::dist::MomentSummary> {
    let m = d.moments();
    let scale = d.points().iter().fold(0.0f64, |acc, x| acc.max(x.abs())).max(f64::MIN_POSITIVE);
    if m.mean.abs() > MEAN_ZERO_TOL * scale {
        return Err(LabError::MeanNotZero { mean: m.mean });
    }
    Ok(m)
}

/// Remainder of `log φ(t) = −σ²t²/2 + θ ρ³ t³` for |t| ≤ 1/ρ.
pub fn lemma3_remainder(d: &DiscreteDist, t: f64) -> Result<RemainderReport> {
    let m = check_centered(d)?;
    if !(m.variance > 0.0) {
        return Err(LabError::ZeroVariance);
    }
    let rho = m.rho();
    let limit = 1.0 / rho;
    if t == 0.0 || !t.is_finite() || t.abs() * rho > 1.0 + RANGE_SLACK {
        return Err(LabError::OutOfRange { t, limit });
    }
    let z = chf_minus_one(d, t);
    let z_modulus = z.norm();
    if z_modulus >= LOG_BRANCH_LIMIT {
        return Err(LabError::LogBranchViolation { t, modulus: z_modulus });
    }
    let a = m.variance * t * t;
    let b = m.abs3 * t * t * t;
    let r = log_chf_remainder(d, z, m.mean, t);
    Ok(RemainderReport {
        t,
        theta_ratio: r.norm() / b.abs(),
        a,
        b,
        in_range: true,
        z_modulus,
    })
}

/// Whether |φ(t)| ≤ exp(−σ²t²/2 + C ρ³ |t|³).
pub fn chf_bound_check(d: &DiscreteDist, t: f64, c: f64) -> Result<bool> {
    let m = check_centered(d)?;
    let lhs = ChfExpr::DiscreteAtoms(d.clone()).eval(t).norm();
    let exponent = -0.5 * m.variance * t * t + c * m.abs3 * (t * t * t).abs();
    Ok(lhs <= exponent.exp() * (1.0 + 1e-15))
}

/// Sweep of [`lemma3_remainder`] over an even t-grid in (0, 1/ρ].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Sweep {
    pub points: usize,
    pub rho: f64,
    /// Θ*, the largest θ ratio on the grid.
    pub theta_max: f64,
    pub t_at_max: f64,
    /// Grid points where a² ≤ |b| failed.
    pub a2_le_b_violations: usize,
    /// Grid points where |b| ≤ 1 failed.
    pub b_le_1_violations: usize,
    pub max_z_modulus: f64,
}

/// Evaluate the remainder at t_j = (j/points)/ρ, j = 1..=points.
pub fn lemma3_sweep(d: &DiscreteDist, points: usize) -> Result<Lemma3Sweep> {
    if points == 0 {
        return Err(LabError::EmptyGrid);
    }
    let rho = check_centered(d)?.rho();
    let reports: Vec<RemainderReport> = (1..=points)
        .into_par_iter()
        .map(|j| lemma3_remainder(d, (j as f64 / points as f64) / rho))
        .collect::<Result<_>>()?;
    let mut sweep = Lemma3Sweep {
        points,
        rho,
        theta_max: 0.0,
        t_at_max: 0.0,
        a2_le_b_violations: 0,
        b_le_1_violations: 0,
        max_z_modulus: 0.0,
    };
    for r in &reports {
        if r.theta_ratio > sweep.theta_max {
            sweep.theta_max = r.theta_ratio;
            sweep.t_at_max = r.t;
        }
        // a² ≤ |b| ≤ 1 up to a few ulps of rounding in a and b
        if r.a * r.a > r.b.abs() * (1.0 + 4.0 * f64::EPSILON) {
            sweep.a2_le_b_violations += 1;
        }
        if r.b.abs() > 1.0 + 4.0 * f64::EPSILON {
            sweep.b_le_1_violations += 1;
        }
        sweep.max_z_modulus = sweep.max_z_modulus.max(r.z_modulus);
    }
    Ok(sweep)
}

/// Accepted deviation of Σσ_k² from 1.
pub const VARIANCE_NORM_TOL: f64 = 1e-10;

/// Σ abs3 after checking Σ variances = 1.
pub fn normalized_rho3(ds: &[DiscreteDist]) -> Result<f64> {
    if ds.is_empty() {
        return Err(LabError::EmptySupport);
    }
    let ms: Vec<_> = ds.iter().map(|d| d.moments()).collect();
    let var: f64 = ms.iter().map(|m| m.variance).sum();
    if (var - 1.0).abs() > VARIANCE_NORM_TOL {
        return Err(LabError::VarianceNotNormalized { sum: var });
    }
    Ok(ms.iter().map(|m| m.abs3).sum())
}

/// |φ_{S}(t) − e^{−t²/2}| where S is the sum of independent `ds`.
///
/// Uses the log-sum route while every factor stays inside |φ_k − 1| < 1/2,
/// otherwise the direct product.
pub fn sum_chf_gap(ds: &[DiscreteDist], t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let zs: Vec<Complex64> = ds.iter().map(|d| chf_minus_one(d, t)).collect();
    if zs.iter().all(|z| z.norm() < 0.5) {
        let mut r = Complex64::new(0.0, 0.0);
        let mut var = 0.0;
        for (d, z) in ds.iter().zip(&zs) {
            let m = d.moments();
            var += m.variance;
            r += log_chf_remainder(d, *z, m.mean, t);
        }
        r += Complex64::new(0.5 * (1.0 - var) * t * t, 0.0);
        normal_chf(t) * expm1_complex(r).norm()
    } else {
        let prod = ds
            .iter()
            .zip(&zs)
            .fold(Complex64::new(1.0, 0.0), |acc, (d, z)| acc * (Complex64::new(d.total_mass(), 0.0) + z));
        (prod - Complex64::new(normal_chf(t), 0.0)).norm()
    }
}

/// Gap between the sum's characteristic function and e^{−t²/2}, and its
/// ratio to ρ³|t|³e^{−t²/4}, for |t| ≤ c_small/ρ³.
pub fn lemma4_gap(ds: &[DiscreteDist], t: f64, c_small: f64) -> Result<(f64, f64)> {
    let rho3 = normalized_rho3(ds)?;
    let limit = c_small / rho3;
    if !t.is_finite() || t.abs() > limit * (1.0 + RANGE_SLACK) {
        return Err(LabError::OutOfRange { t, limit });
    }
    if t == 0.0 {
        return Ok((0.0, 0.0));
    }
    let gap = sum_chf_gap(ds, t);
    let envelope = rho3 * (t * t * t).abs() * (-0.25 * t * t).exp();
    Ok((gap, gap / envelope))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma4Sweep {
    pub points: usize,
    pub rho3: f64,
    pub t_limit: f64,
    /// Λ*, the largest gap ratio on the grid.
    pub ratio_max: f64,
    pub t_at_max: f64,
    pub gap_max: f64,
}

/// Sweep [`lemma4_gap`] over `points` nonzero grid points on each side of 0
/// in [−c_small/ρ³, c_small/ρ³].
pub fn lemma4_sweep(ds: &[DiscreteDist], c_small: f64, points: usize) -> Result<Lemma4Sweep> {
    if points == 0 {
        return Err(LabError::EmptyGrid);
    }
    let rho3 = normalized_rho3(ds)?;
    let t_limit = c_small / rho3;
    let ts: Vec<f64> = (1..=points)
        .flat_map(|j| {
            let t = t_limit * j as f64 / points as f64;
            [-t, t]
        })
        .collect();
    let vals: Vec<(f64, f64)> = ts.par_iter().map(|&t| lemma4_gap(ds, t, c_small)).collect::<Result<_>>()?;
    let mut sweep = Lemma4Sweep {
        points,
        rho3,
        t_limit,
        ratio_max: 0.0,
        t_at_max: 0.0,
        gap_max: 0.0,
    };
    for (&t, &(gap, ratio)) in ts.iter().zip(&vals) {
        if ratio > sweep.ratio_max {
            sweep.ratio_max = ratio;
            sweep.t_at_max = t;
        }
        sweep.gap_max = sweep.gap_max.max(gap);
    }
    Ok(sweep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convolution::{normalized_summand, sum_independent, ConvolveOptions};
    use crate::dist::Family;
    use proptest::prelude::*;

    fn rad() -> DiscreteDist {
        Family::Rademacher.build().unwrap()
    }

    fn suite() -> Vec<DiscreteDist> {
        [
            Family::Rademacher,
            Family::CenteredBernoulli { p: 0.3 },
            Family::TwoPoint { x1: -2.0, x2: 1.0 },
            Family::UniformLattice { m: 5 },
        ]
        .iter()
        .map(|f| f.build().unwrap())
        .collect()
    }

    #[test]
    fn eval_examples() {
        let g = ChfExpr::StandardNormal.eval(1.0);
        assert!((g.re - 0.606_530_659_712_633_4).abs() < 1e-15 && g.im == 0.0);
        let r = ChfExpr::DiscreteAtoms(rad());
        for i in -50..=50 {
            let t = i as f64 * 0.37;
            let v = r.eval(t);
            assert!((v.re - t.cos()).abs() < 1e-15 && v.im.abs() < 1e-15);
        }
        for e in [r.clone(), ChfExpr::StandardNormal, ChfExpr::scaled(2.0, r.clone())] {
            assert_eq!(e.eval(0.0), Complex64::new(1.0, 0.0));
        }
        let scaled = ChfExpr::scaled(0.5, ChfExpr::StandardNormal).eval(2.0);
        assert!((scaled.re - (-0.5f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn product_matches_exact_convolution() {
        let ds: Vec<DiscreteDist> = suite()
            .iter()
            .map(|d| d.standardize().unwrap().scale(0.5).unwrap())
            .collect();
        let sum = sum_independent(&ds, &ConvolveOptions::default()).unwrap();
        let prod = ChfExpr::product_of(&ds);
        let atoms = ChfExpr::DiscreteAtoms(sum);
        for i in -100..=100 {
            let t = i as f64 * 0.13;
            assert!((prod.eval(t) - atoms.eval(t)).norm() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn moments_of_expressions() {
        let e = ChfExpr::ProductOfIndependent(vec![
            ChfExpr::scaled(0.6, ChfExpr::StandardNormal),
            ChfExpr::scaled(0.8, ChfExpr::DiscreteAtoms(rad())),
        ]);
        let (m, s) = e.first_two_moments();
        assert_eq!(m, 0.0);
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cancellation_free_helpers() {
        for z in [Complex64::new(0.05, -0.03), Complex64::new(-0.09, 0.0), Complex64::new(0.3, 0.2)] {
            let direct = log1p_complex(z) - z;
            assert!((log1p_minus_id(z) - direct).norm() < 1e-15);
        }
        // log(1 + z) − z = −z²/2 + z³/3 − ... dominated by −z²/2 for tiny z
        let z = Complex64::new(1e-9, 2e-9);
        assert!((log1p_minus_id(z) + z * z / 2.0).norm() < 1e-26);
        for v in [1e-6, 0.1, 0.49, 0.7, -2.0] {
            let s = sin_minus_id(v);
            assert!((s - (v.sin() - v)).abs() < 1e-15, "{v}");
        }
        assert!((sin_minus_id(1e-6) + 1e-18 / 6.0).abs() < 1e-30);
    }

    #[test]
    fn remainder_small_t_series() {
        // log cos t + t²/2 = −t⁴/12 − t⁶/45 − 17t⁸/2520 − ...
        let t: f64 = 1e-3;
        let series = (t.powi(4) / 12.0 + t.powi(6) / 45.0 + 17.0 * t.powi(8) / 2520.0) / t.powi(3);
        let r = lemma3_remainder(&rad(), t).unwrap();
        assert!((r.theta_ratio - series).abs() < 1e-12 * series + 1e-18);
        assert!((r.theta_ratio - t / 12.0).abs() < 1e-9);
    }

    #[test]
    fn remainder_at_one() {
        // |log cos 1 + 1/2| from the libm oracle: cos 1 = 0.5403023058681398
        let expected = (0.540_302_305_868_139_8f64.ln() + 0.5).abs();
        let r = lemma3_remainder(&rad(), 1.0).unwrap();
        assert!((r.theta_ratio - expected).abs() < 1e-14);
        assert!((r.theta_ratio - 0.115_626_4).abs() < 1e-6);
        assert_eq!((r.a, r.b), (1.0, 1.0));
    }

    #[test]
    fn remainder_errors() {
        assert!(matches!(lemma3_remainder(&rad(), 1.5), Err(LabError::OutOfRange { .. })));
        assert!(matches!(lemma3_remainder(&rad(), 0.0), Err(LabError::OutOfRange { .. })));
        let off = DiscreteDist::new(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        assert!(matches!(lemma3_remainder(&off, 0.1), Err(LabError::MeanNotZero { .. })));
        assert_eq!(
            lemma3_remainder(&DiscreteDist::point_mass(0.0), 0.1),
            Err(LabError::ZeroVariance)
        );
    }

    #[test]
    fn chf_bound_examples() {
        for t in [1.01, 2.0, 3.5, -7.0, 40.0] {
            assert!(chf_bound_check(&rad(), t, 1.0).unwrap());
        }
        for d in suite() {
            assert!(chf_bound_check(&d, 0.0, 0.0).unwrap());
        }
        let theta = lemma3_sweep(&rad(), 1000).unwrap().theta_max;
        assert!(chf_bound_check(&rad(), 0.5, theta).unwrap());
    }

    #[test]
    fn sweep_respects_quadratic_regime() {
        for d in suite() {
            let s = lemma3_sweep(&d, 1000).unwrap();
            assert_eq!(s.a2_le_b_violations, 0);
            assert_eq!(s.b_le_1_violations, 0);
            assert!(s.max_z_modulus <= 2.0 / 3.0);
            assert!(s.theta_max.is_finite() && s.theta_max > 0.0);
        }
    }

    #[test]
    fn lemma4_closed_form() {
        let n = 16u64;
        let x = normalized_summand(&rad(), n).unwrap();
        let ds = vec![x; n as usize];
        for t in [0.05, 0.3, 0.7, 1.0] {
            let (gap, ratio) = lemma4_gap(&ds, t, 0.25).unwrap();
            let direct = ((t / 4.0f64).cos().powi(16) - (-0.5 * t * t).exp()).abs();
            assert!((gap - direct).abs() < 1e-14, "t = {t}");
            let env = 0.25 * t * t * t * (-0.25 * t * t).exp();
            assert!((ratio - gap / env).abs() <= 1e-12 * ratio);
        }
        assert_eq!(lemma4_gap(&ds, 0.0, 0.25).unwrap(), (0.0, 0.0));
        assert!(matches!(lemma4_gap(&ds, 1.5, 0.25), Err(LabError::OutOfRange { .. })));
        assert!(matches!(
            lemma4_gap(&ds[..4], 0.1, 0.25),
            Err(LabError::VarianceNotNormalized { .. })
        ));
    }

    #[test]
    fn stable_gap_matches_series_at_tiny_t() {
        // n·log cos(t/√n) + t²/2 ≈ −t⁴/(12n) for symmetric ±1/√n summands
        let n = 64u64;
        let ds = vec![normalized_summand(&rad(), n).unwrap(); n as usize];
        let t: f64 = 1e-4;
        let expected = (-0.5 * t * t).exp() * t.powi(4) / (12.0 * n as f64);
        let gap = sum_chf_gap(&ds, t);
        assert!((gap - expected).abs() < 1e-6 * expected);
    }

    proptest! {
        #[test]
        fn hermitian_and_bounded(idx in 0usize..4, c in 0.1f64..3.0, t in -50.0f64..50.0) {
            let d = suite()[idx].scale(c).unwrap();
            let exprs = [
                ChfExpr::DiscreteAtoms(d.clone()),
                ChfExpr::scaled(c, ChfExpr::StandardNormal),
                ChfExpr::ProductOfIndependent(vec![ChfExpr::DiscreteAtoms(d), ChfExpr::StandardNormal]),
            ];
            for e in &exprs {
                let v = e.eval(t);
                prop_assert!((e.eval(-t) - v.conj()).norm() < 1e-12);
                prop_assert!(v.norm() <= 1.0 + 1e-12);
            }
        }
    }
}
