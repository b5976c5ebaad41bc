//! Right-hand sides of the smoothing inequality and the end-to-end
//! Berry–Esseen bound, evaluated against exact left-hand sides.

use crate::charfun::{lemma3_sweep, lemma4_sweep, normalized_rho3, ChfExpr};
use crate::convolution::{sum_independent, ConvolveOptions};
use crate::dist::DiscreteDist;
use crate::error::{LabError, Result};
use crate::kernel::Kernel;
use crate::kolmogorov::{kolmogorov_vs_normal, sup_smoothed_discrepancy};
use crate::normal::{normal_cdf, NORMAL_DENSITY_MAX};
use crate::quadrature::{integrate, integrate_breaks, QuadOptions};
use serde::{Deserialize, Serialize};

/// Width of the window (−δ, δ) around t = 0 that is bounded analytically
/// instead of integrated.
pub const ORIGIN_EXCLUSION: f64 = 1e-8;
/// Factor linking the kernel tail constant to the smoothing constant.
pub const SMOOTHING_FACTOR: f64 = 18.0;
/// Slack granted to the grid-based supremum in the second smoothing step.
pub const LEMMA2_SLACK: f64 = 1e-6;
/// Points per side in the envelope sweep that calibrates the majorant.
pub const LEMMA4_POINTS: usize = 1000;
/// Points in the per-summand remainder sweep used to calibrate c.
pub const LEMMA3_POINTS: usize = 1000;
/// ρ³ beyond `WIDE_FACTOR · c_small` leaves a window 1/ε below 1/8.
pub const WIDE_FACTOR: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundConfig {
    /// Smoothing scale ε; `None` means ε = ρ³/c_small.
    pub eps: Option<f64>,
    pub quad_tol: f64,
    pub c_small: f64,
    /// `None` means 18 · c_phi_tail of the kernel in use.
    pub c_smooth: Option<f64>,
    /// `None` means no Berry–Esseen constant is asserted.
    pub c_be: Option<f64>,
    /// `None` means the envelope ratio is measured on the instance.
    pub lemma4_constant: Option<f64>,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            eps: None,
            quad_tol: 1e-9,
            c_small: 0.25,
            c_smooth: None,
            c_be: None,
            lemma4_constant: None,
        }
    }
}

impl BoundConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(LabError::BadParam(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("quad_tol", self.quad_tol)?;
        positive("c_small", self.c_small)?;
        for (name, v) in [
            ("eps", self.eps),
            ("c_smooth", self.c_smooth),
            ("c_be", self.c_be),
            ("lemma4_constant", self.lemma4_constant),
        ] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        Ok(())
    }

    pub fn c_smooth_for(&self, k: &Kernel) -> f64 {
        self.c_smooth.unwrap_or(SMOOTHING_FACTOR * k.c_phi_tail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// Exact Kolmogorov distance to the standard normal.
    pub lhs: f64,
    pub integral_term: f64,
    /// C · M · ε
    pub tail_term: f64,
    /// 2 · integral_term + tail_term
    pub rhs: f64,
    /// Smallest C with lhs ≤ 2 · integral_term + C · M · ε.
    pub min_feasible_c: f64,
    pub eps: f64,
    pub c_smooth: f64,
    pub density_bound: f64,
    /// Set by the end-to-end bound only.
    pub end_to_end: Option<EndToEndExtras>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndToEndExtras {
    pub rho3: f64,
    /// c actually used after calibration.
    pub c_small: f64,
    /// Constant in |φ_S(t) − e^{−t²/2}| ≤ C ρ³ |t|³ e^{−t²/4}.
    pub lemma4_constant: f64,
    /// 2 C ρ³ ∫_{−1/ε}^{1/ε} t² e^{−t²/4} dt, which dominates 2 · integral_term.
    pub majorant: f64,
    /// ρ³ ≥ 8 c_small: the window [−1/ε, 1/ε] is too narrow to be informative.
    pub wide_epsilon: bool,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(LabError::BadParam(format!("eps must be positive and finite, got {eps}")))
    }
}

/// ∫_{−1/ε}^{1/ε} |(φ_X(t) − φ_Y(t))/t| dt.
///
/// For real laws φ(−t) is the conjugate of φ(t), so the integrand is even
/// and only (δ, 1/ε] is integrated. On (−δ, δ) the Taylor bound
/// |φ_X − φ_Y| ≤ |t||m_X − m_Y| + t²(s_X + s_Y)/2 (m mean, s second moment)
/// contributes at most 2δ|m_X − m_Y| + δ²(s_X + s_Y)/2.
pub fn chf_integral(x: &ChfExpr, y: &ChfExpr, eps: f64, quad_tol: f64) -> Result<f64> {
    check_eps(eps)?;
    if x == y {
        return Ok(0.0);
    }
    let top = 1.0 / eps;
    let delta = ORIGIN_EXCLUSION.min(top);
    let (mx, sx) = x.first_two_moments();
    let (my, sy) = y.first_two_moments();
    let origin = 2.0 * delta * (mx - my).abs() + delta * delta * 0.5 * (sx + sy);
    let half = integrate(
        |t| ((x.eval(t) - y.eval(t)) / t).norm(),
        delta,
        top,
        &QuadOptions::with_tol(0.5 * quad_tol),
    )?;
    Ok(2.0 * half.value + origin)
}

/// Exact sup_a |P{X ≤ a} − Φ(a)| for laws expressible as a [`ChfExpr`].
fn distance_to_normal(x: &ChfExpr) -> Result<f64> {
    match x {
        ChfExpr::StandardNormal => Ok(0.0),
        ChfExpr::Scaled(c, inner) if **inner == ChfExpr::StandardNormal => {
            Ok(scaled_normal_distance(c.abs()))
        }
        _ => Ok(kolmogorov_vs_normal(&collapse(x)?).distance),
    }
}

/// sup_a |Φ(a/c) − Φ(a)|, attained where the two densities cross.
fn scaled_normal_distance(c: f64) -> f64 {
    if c == 1.0 {
        return 0.0;
    }
    if c == 0.0 {
        return 0.5;
    }
    let a = (2.0 * c * c * c.ln() / (c * c - 1.0)).sqrt();
    (normal_cdf(a / c) - normal_cdf(a)).abs()
}

fn collapse(x: &ChfExpr) -> Result<DiscreteDist> {
    match x {
        ChfExpr::DiscreteAtoms(d) => Ok(d.clone()),
        ChfExpr::Scaled(c, inner) => collapse(inner)?.scale(*c),
        ChfExpr::ProductOfIndependent(parts) => {
            let ds = parts.iter().map(collapse).collect::<Result<Vec<_>>>()?;
            sum_independent(&ds, &ConvolveOptions::default())
        }
        ChfExpr::StandardNormal => Err(LabError::BadParam(
            "a law with a normal component has no finite atom list".into(),
        )),
    }
}

fn report(lhs: f64, integral_term: f64, c_smooth: f64, m: f64, eps: f64) -> BoundReport {
    let tail_term = c_smooth * m * eps;
    BoundReport {
        lhs,
        integral_term,
        tail_term,
        rhs: 2.0 * integral_term + tail_term,
        min_feasible_c: ((lhs - 2.0 * integral_term) / (m * eps)).max(0.0),
        eps,
        c_smooth,
        density_bound: m,
        end_to_end: None,
    }
}

/// Esseen's smoothing inequality against Y = G, with lhs computed exactly.
pub fn esseen_rhs(x: &ChfExpr, m: f64, eps: f64, k: &Kernel, cfg: &BoundConfig) -> Result<BoundReport> {
    check_eps(eps)?;
    if !(m > 0.0) || !m.is_finite() {
        return Err(LabError::BadParam(format!("density bound must be positive, got {m}")));
    }
    let lhs = distance_to_normal(x)?;
    let integral = chf_integral(x, &ChfExpr::StandardNormal, eps, cfg.quad_tol)?;
    Ok(report(lhs, integral, cfg.c_smooth_for(k), m, eps))
}

/// The smoothing proof picks ā with Δ(ā) ≥ 0.9 Δ̄ ...
pub const NEAR_MAX_FRACTION: f64 = 0.9;
/// ... and keeps Δ ≥ Δ̄/2 on an interval of length Δ̄/(3M) after it.
pub const WINDOW_FRACTION: f64 = 1.0 / 3.0;

/// Outcome of the first smoothing step for one (d, ε).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Check {
    pub distance: f64,
    pub sup_smoothed: f64,
    /// 18 · C_φ · M · ε
    pub tail: f64,
    pub holds: bool,
    pub near_max_fraction: f64,
    /// Half-length T = Δ̄/(6M) of the window in the proof, in units of ε.
    pub window_half_width: f64,
}

/// distance ≤ 2 · sup_a |Δ_f(a)| + 18 C_φ M ε.
pub fn lemma1_check(d: &DiscreteDist, k: &Kernel, eps: f64) -> Result<Lemma1Check> {
    check_eps(eps)?;
    let distance = kolmogorov_vs_normal(d).distance;
    let (sup_smoothed, _) = sup_smoothed_discrepancy(d, k, eps)?;
    let tail = SMOOTHING_FACTOR * k.c_phi_tail * NORMAL_DENSITY_MAX * eps;
    Ok(Lemma1Check {
        distance,
        sup_smoothed,
        tail,
        holds: distance <= 2.0 * sup_smoothed + tail,
        near_max_fraction: NEAR_MAX_FRACTION,
        window_half_width: 0.5 * WINDOW_FRACTION * distance / (NORMAL_DENSITY_MAX * eps),
    })
}

/// (sup_a |Δ_f(a)|, ∫_{−1/ε}^{1/ε} |(φ_X − e^{−t²/2})/t| dt).
pub fn lemma2_check(d: &DiscreteDist, k: &Kernel, eps: f64, quad_tol: f64) -> Result<(f64, f64)> {
    check_eps(eps)?;
    let (lhs, _) = sup_smoothed_discrepancy(d, k, eps)?;
    let rhs = chf_integral(&ChfExpr::DiscreteAtoms(d.clone()), &ChfExpr::StandardNormal, eps, quad_tol)?;
    Ok((lhs, rhs))
}

fn check_summands(ds: &[DiscreteDist]) -> Result<f64> {
    if ds.is_empty() {
        return Err(LabError::EmptySupport);
    }
    for d in ds {
        let m = d.moments();
        let scale = d.points().iter().fold(0.0f64, |acc, x| acc.max(x.abs())).max(f64::MIN_POSITIVE);
        if m.mean.abs() > 1e-12 * scale {
            return Err(LabError::MeanNotZero { mean: m.mean });
        }
    }
    normalized_rho3(ds)
}

/// Largest c ≤ `requested` for which the summand-wise remainder envelope
/// gives θρ³|t|³ ≤ t²/4 on |t| ≤ c/ρ³, with |t| ≤ 1/ρ_k for every summand.
pub fn calibrate_c_small(ds: &[DiscreteDist], requested: f64) -> Result<f64> {
    let rho3 = check_summands(ds)?;
    let mut c = requested;
    let mut theta: f64 = 0.0;
    for d in ds {
        let m = d.moments();
        if m.variance == 0.0 {
            continue;
        }
        let sweep = lemma3_sweep(d, LEMMA3_POINTS)?;
        theta = theta.max(sweep.theta_max);
        c = c.min(rho3 / m.rho());
    }
    if theta > 0.0 {
        c = c.min(0.25 / theta);
    }
    if c < requested {
        log::warn!("c_small shrunk from {requested} to {c} (remainder envelope {theta})");
    }
    Ok(c)
}

/// The end-to-end bound for S = Σ X_k at 1/ε = c/ρ³.
pub fn end_to_end_bound(ds: &[DiscreteDist], k: &Kernel, cfg: &BoundConfig) -> Result<BoundReport> {
    cfg.validate()?;
    let rho3 = check_summands(ds)?;
    let c = calibrate_c_small(ds, cfg.c_small)?;
    let eps = cfg.eps.unwrap_or(rho3 / c);
    let sum = sum_independent(ds, &ConvolveOptions::default())?;
    let lhs = kolmogorov_vs_normal(&sum).distance;
    let x = ChfExpr::product_of(ds);
    let integral = chf_integral(&x, &ChfExpr::StandardNormal, eps, cfg.quad_tol)?;
    let mut out = report(lhs, integral, cfg.c_smooth_for(k), NORMAL_DENSITY_MAX, eps);
    let lemma4_constant = match cfg.lemma4_constant {
        Some(v) => v,
        None => lemma4_sweep(ds, c, LEMMA4_POINTS)?.ratio_max,
    };
    let top = 1.0 / eps;
    let weight = integrate_breaks(|t| t * t * (-0.25 * t * t).exp(), &[-top, 0.0, top], &QuadOptions::with_tol(1e-12))?;
    out.end_to_end = Some(EndToEndExtras {
        rho3,
        c_small: c,
        lemma4_constant,
        majorant: 2.0 * lemma4_constant * rho3 * weight.value,
        wide_epsilon: rho3 >= WIDE_FACTOR * c,
    });
    Ok(out)
}

/// C_be · Σ E|X_k|³.
pub fn berry_esseen_rhs(ds: &[DiscreteDist], c_be: f64) -> Result<f64> {
    Ok(c_be * check_summands(ds)?)
}
