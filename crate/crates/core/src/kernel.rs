//! The smoothing density φ = ψ̂² built from a compactly supported bump ψ.
//!
//! ψ lives on [−1/4π, 1/4π], so φ̂ = ψ ∗ ψ vanishes outside [−1/2π, 1/2π].
//! φ is tabulated on [−R, R] together with φ' (from the transform of xψ),
//! and the smoothed indicator f(x) = ∫_x^∞ φ is accumulated cell by cell
//! with the endpoint-corrected trapezoid rule. Between nodes f is a
//! monotone cubic Hermite interpolant with slopes −φ.

use crate::error::{LabError, Result};
use crate::fourier::GridFunction;
use crate::quadrature::{integrate, QuadOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Half-width of the support of ψ.
pub const PSI_HALF_WIDTH: f64 = 1.0 / (4.0 * PI);
/// Half-width of the support of φ̂.
pub const PHI_HAT_HALF_WIDTH: f64 = 1.0 / (2.0 * PI);
pub const MIN_PSI_POINTS: usize = 2048;

/// Grid layout for kernel construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelGrid {
    /// Samples of ψ across its support; must be odd so 0 is a node.
    pub psi_points: usize,
    /// φ and f are tabulated on [−R, R].
    pub phi_half_width: f64,
    pub phi_step: f64,
    /// φ̂ leak is measured on [1/2π + margin, support_check_max].
    pub support_margin: f64,
    pub support_check_max: f64,
    pub support_check_step: f64,
}

impl Default for KernelGrid {
    fn default() -> Self {
        Self {
            psi_points: 2049,
            phi_half_width: 256.0,
            phi_step: 1.0 / 256.0,
            support_margin: 0.01,
            support_check_max: 4.0,
            support_check_step: 0.01,
        }
    }
}

impl KernelGrid {
    fn validate(&self) -> Result<()> {
        if self.psi_points < MIN_PSI_POINTS {
            return Err(LabError::GridTooCoarse(format!(
                "{} samples of psi, need at least {MIN_PSI_POINTS}",
                self.psi_points
            )));
        }
        if self.psi_points % 2 == 0 {
            return Err(LabError::BadParam("psi_points must be odd".into()));
        }
        let cells = self.phi_half_width / self.phi_step;
        if !(self.phi_step > 0.0) || !(self.phi_half_width > 0.0) || (cells - cells.round()).abs() > 1e-9 {
            return Err(LabError::BadParam(
                "phi_half_width must be a positive multiple of phi_step".into(),
            ));
        }
        if !(self.support_check_step > 0.0) || !(self.support_margin >= 0.0) {
            return Err(LabError::BadParam("bad support-check grid".into()));
        }
        Ok(())
    }
}

fn bump_profile(x: f64) -> f64 {
    let u = x / PSI_HALF_WIDTH;
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

/// ψ(x) = κ·exp(−1/(1 − (4πx)²)) on |x| < 1/4π, normalized to ∫ψ² = 1.
pub fn bump_psi(grid: &KernelGrid) -> Result<GridFunction<f64>> {
    grid.validate()?;
    let n = grid.psi_points;
    let center = (n / 2) as f64;
    let dx = PSI_HALF_WIDTH / center;
    // x_j = (j − center)·dx is exactly antisymmetric, so ψ is exactly even
    let raw: Vec<f64> = (0..n).map(|j| bump_profile((j as f64 - center) * dx)).collect();
    let g = GridFunction::new(-center * dx, dx, raw)?;
    let l2: f64 = g.vals.iter().enumerate().map(|(i, v)| g.weight(i) * v * v).sum::<f64>() * dx;
    let kappa = 1.0 / l2.sqrt();
    GridFunction::new(g.x0, dx, g.vals.iter().map(|v| kappa * v).collect())
}

/// Trapezoid transform of an even function sampled on a symmetric odd
/// grid: returns (ĝ(t), ĝ'(t)), both real.
fn even_transform(g: &GridFunction<f64>, t: f64) -> (f64, f64) {
    let c = g.len() / 2;
    let mut val = g.vals[c];
    let mut der = 0.0;
    for j in (c + 1)..g.len() {
        let x = (j - c) as f64 * g.dx;
        let w = g.weight(j) * g.vals[j];
        let (s, co) = (2.0 * PI * t * x).sin_cos();
        val += 2.0 * w * co;
        der -= 2.0 * w * x * s;
    }
    (val * g.dx, 2.0 * PI * der * g.dx)
}

/// The constructed smoothing kernel and its derived constants.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub grid: KernelGrid,
    pub psi: GridFunction<f64>,
    /// φ = ψ̂² on [−R, R].
    pub phi: GridFunction<f64>,
    /// φ' on the same grid.
    pub dphi: GridFunction<f64>,
    /// f(x) = ∫_x^∞ φ on the same grid.
    pub f_table: GridFunction<f64>,
    /// C_φ = sup_{T>0} T·∫_{|y|>T} φ over grid values of T.
    pub c_phi_tail: f64,
    /// |∫φ − 1|.
    pub mass_defect: f64,
    /// max |φ̂(t)| on the support-check grid outside [−1/2π, 1/2π].
    pub support_leak: f64,
}

/// JSON summary written next to the kernel tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSummary {
    pub mass_defect: f64,
    pub c_phi_tail: f64,
    pub support_check: f64,
    pub min_phi: f64,
    pub phi_half_width: f64,
    pub phi_step: f64,
    pub psi_points: usize,
}

/// Build φ = ψ̂², the smoothed indicator table and the tail constant.
pub fn build_kernel(grid: &KernelGrid) -> Result<Kernel> {
    let psi = bump_psi(grid)?;
    let h = grid.phi_step;
    let half = (grid.phi_half_width / h).round() as usize;
    let alias = grid.phi_half_width * psi.dx;
    if alias > crate::fourier::ALIAS_LIMIT {
        return Err(LabError::AliasRisk { product: alias });
    }
    // t ≥ 0 half, then mirrored: φ even, φ' odd
    let right: Vec<(f64, f64)> = (0..=half)
        .into_par_iter()
        .map(|i| {
            let (v, d) = even_transform(&psi, i as f64 * h);
            (v * v, 2.0 * v * d)
        })
        .collect();
    let n = 2 * half + 1;
    let mut phi = vec![0.0; n];
    let mut dphi = vec![0.0; n];
    for (i, &(v, d)) in right.iter().enumerate() {
        phi[half + i] = v;
        phi[half - i] = v;
        dphi[half + i] = d;
        dphi[half - i] = -d;
    }
    let mut f = vec![0.0; n];
    for i in (0..n - 1).rev() {
        let cell = 0.5 * h * (phi[i] + phi[i + 1]) + h * h / 12.0 * (dphi[i] - dphi[i + 1]);
        f[i] = f[i + 1] + cell.max(0.0);
    }
    let mass = f[0];
    let x0 = -(half as f64) * h;
    // tail(T) = ∫_{|y|>T} φ = f(T) + (mass − f(−T))
    let c_phi_tail = (1..=half)
        .map(|i| {
            let t = i as f64 * h;
            t * (f[half + i] + mass - f[half - i])
        })
        .fold(0.0, f64::max);
    let phi = GridFunction::new(x0, h, phi)?;
    let support_leak = phi_hat_leak(&phi, grid);
    Ok(Kernel {
        grid: *grid,
        psi,
        dphi: GridFunction::new(x0, h, dphi)?,
        f_table: GridFunction::new(x0, h, f)?,
        c_phi_tail,
        mass_defect: (mass - 1.0).abs(),
        support_leak,
        phi,
    })
}

fn phi_hat_leak(phi: &GridFunction<f64>, grid: &KernelGrid) -> f64 {
    let start = PHI_HAT_HALF_WIDTH + grid.support_margin;
    if grid.support_check_max < start {
        return 0.0;
    }
    let count = ((grid.support_check_max - start) / grid.support_check_step).floor() as usize + 1;
    (0..count)
        .into_par_iter()
        .map(|k| even_transform(phi, start + k as f64 * grid.support_check_step).0.abs())
        .reduce(|| 0.0, f64::max)
}

impl Kernel {
    /// ψ̂(x), evaluated directly from the ψ samples.
    pub fn psi_hat(&self, x: f64) -> f64 {
        even_transform(&self.psi, x).0
    }

    /// φ(x) = ψ̂(x)² at an arbitrary point.
    pub fn density(&self, x: f64) -> f64 {
        let v = self.psi_hat(x);
        v * v
    }

    /// φ̂(t) from the tabulated φ.
    pub fn phi_hat(&self, t: f64) -> f64 {
        even_transform(&self.phi, t).0
    }

    pub fn mass(&self) -> f64 {
        self.f_table.vals[0]
    }

    /// ∫_{|y|>T} φ for T ≥ 0.
    pub fn tail_mass(&self, t: f64) -> f64 {
        let t = t.abs();
        self.smoothed_indicator(t) + self.mass() - self.smoothed_indicator(-t)
    }

    pub fn min_phi(&self) -> f64 {
        self.phi.vals.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// f(x) = ∫_x^∞ φ, nonincreasing in x and clamped to [0, 1].
    pub fn smoothed_indicator(&self, x: f64) -> f64 {
        let tab = &self.f_table;
        let last = tab.len() - 1;
        let pos = (x - tab.x0) / tab.dx;
        if !(pos > 0.0) {
            // also catches NaN
            return if x.is_nan() { f64::NAN } else { tab.vals[0].clamp(0.0, 1.0) };
        }
        if pos >= last as f64 {
            return 0.0;
        }
        let i = (pos.floor() as usize).min(last - 1);
        let s = pos - i as f64;
        let (f0, f1) = (tab.vals[i], tab.vals[i + 1]);
        let delta = f1 - f0;
        if delta == 0.0 {
            return f0.clamp(0.0, 1.0);
        }
        let h = tab.dx;
        let mut m0 = -self.phi.vals[i] * h;
        let mut m1 = -self.phi.vals[i + 1] * h;
        // Fritsch–Carlson: keep (α, β) inside the circle of radius 3
        let (a, b) = (m0 / delta, m1 / delta);
        let r2 = a * a + b * b;
        if r2 > 9.0 {
            let tau = 3.0 / r2.sqrt();
            m0 = tau * a * delta;
            m1 = tau * b * delta;
        }
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * f0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * f1
            + (s3 - s2) * m1;
        v.clamp(0.0, 1.0)
    }

    pub fn summary(&self) -> KernelSummary {
        KernelSummary {
            mass_defect: self.mass_defect,
            c_phi_tail: self.c_phi_tail,
            support_check: self.support_leak,
            min_phi: self.min_phi(),
            phi_half_width: self.grid.phi_half_width,
            phi_step: self.grid.phi_step,
            psi_points: self.grid.psi_points,
        }
    }

    /// ∫_x^y φ by adaptive quadrature of the directly evaluated density.
    pub fn density_integral(&self, x: f64, y: f64, tol: f64) -> Result<f64> {
        Ok(integrate(|u| self.density(u), x, y, &QuadOptions::with_tol(tol))?.value)
    }
}

/// f(x) for a built kernel, as a free function.
pub fn smoothed_indicator(k: &Kernel, x: f64) -> f64 {
    k.smoothed_indicator(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{convolution_theorem_check, double_transform_check, fourier_grid, grid_convolve, plancherel_check, FreqGrid};
    use std::sync::OnceLock;

    fn kernel() -> &'static Kernel {
        static K: OnceLock<Kernel> = OnceLock::new();
        K.get_or_init(|| build_kernel(&KernelGrid::default()).unwrap())
    }

    #[test]
    fn psi_shape() {
        let psi = &kernel().psi;
        let c = psi.len() / 2;
        assert!(psi.vals[c] > 0.0);
        let kappa = psi.vals[c] / (-1.0f64).exp();
        assert!((psi.vals[c] - kappa * (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(psi.vals[0], 0.0);
        assert_eq!(psi.vals[psi.len() - 1], 0.0);
        assert!((psi.x0 + PSI_HALF_WIDTH).abs() < 1e-15);
        for j in 0..psi.len() {
            assert_eq!(psi.vals[j], psi.vals[psi.len() - 1 - j]);
        }
        let l2: f64 = psi.vals.iter().enumerate().map(|(i, v)| psi.weight(i) * v * v).sum::<f64>() * psi.dx;
        assert!((l2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn grid_validation() {
        let coarse = KernelGrid {
            psi_points: 1025,
            ..KernelGrid::default()
        };
        assert!(matches!(bump_psi(&coarse), Err(LabError::GridTooCoarse(_))));
        let even = KernelGrid {
            psi_points: 2048,
            ..KernelGrid::default()
        };
        assert!(matches!(bump_psi(&even), Err(LabError::BadParam(_))));
    }

    #[test]
    fn kernel_invariants() {
        let k = kernel();
        assert!(k.mass_defect <= 1e-6, "mass defect {}", k.mass_defect);
        assert!(k.min_phi() >= -1e-9);
        assert!(k.support_leak <= 1e-6, "leak {}", k.support_leak);
        assert!(k.c_phi_tail.is_finite() && k.c_phi_tail > 0.0);
        assert!(k.f_table.vals.windows(2).all(|w| w[1] <= w[0]));
        assert!((k.smoothed_indicator(-1e6) - 1.0).abs() <= 1e-6);
        assert!(k.smoothed_indicator(1e6) <= 1e-6);
        let r = k.grid.phi_half_width;
        assert!((k.smoothed_indicator(-r) - 1.0).abs() <= 1e-6);
        assert!(k.smoothed_indicator(r) <= 1e-6);
        // φ has sub-exponential tails: a visible fraction of mass sits past ±10
        let beyond_ten = k.tail_mass(10.0);
        assert!(beyond_ten > 1e-4 && beyond_ten < 2e-2, "{beyond_ten}");
    }

    #[test]
    fn indicator_is_half_at_zero() {
        assert!((kernel().smoothed_indicator(0.0) - 0.5).abs() <= 1e-6);
    }

    #[test]
    fn indicator_is_monotone_between_nodes() {
        let k = kernel();
        let mut prev = 1.0;
        let mut x = -30.0;
        while x < 30.0 {
            let v = k.smoothed_indicator(x);
            assert!(v <= prev, "x = {x}");
            prev = v;
            x += 0.000_731;
        }
    }

    #[test]
    fn indicator_differences_match_density_integral() {
        let k = kernel();
        for (x, y) in [(-0.3, 0.2), (0.0123, 1.7), (-3.3, -1.01), (2.5, 9.9)] {
            let table = k.smoothed_indicator(x) - k.smoothed_indicator(y);
            let direct = k.density_integral(x, y, 1e-12).unwrap();
            assert!((table - direct).abs() < 1e-8, "({x}, {y}): {table} vs {direct}");
        }
    }

    #[test]
    fn tail_constant_dominates_tails() {
        let k = kernel();
        let half = k.phi.len() / 2;
        for i in (1..=half).step_by(97) {
            let t = i as f64 * k.phi.dx;
            assert!(k.tail_mass(t) <= k.c_phi_tail / t * (1.0 + 1e-12), "T = {t}");
        }
    }

    #[test]
    fn density_matches_table() {
        let k = kernel();
        for i in (0..k.phi.len()).step_by(4099) {
            assert!((k.density(k.phi.x(i)) - k.phi.vals[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn fourier_identities_on_psi() {
        let k = kernel();
        let (l, r) = plancherel_check(&k.psi).unwrap();
        assert!((l - 1.0).abs() < 1e-6 && (r - 1.0).abs() < 1e-6, "{l} {r}");
        assert!(double_transform_check(&k.psi).unwrap() < 1e-6);
    }

    #[test]
    fn psi_autoconvolution_transforms_to_phi() {
        let k = kernel();
        let freqs = FreqGrid::new(-6.0, 0.25, 49);
        assert!(convolution_theorem_check(&k.psi, &k.psi, &freqs).unwrap() <= 1e-6);
        let conv = grid_convolve(&k.psi, &k.psi).unwrap();
        let hat = fourier_grid(&conv, &freqs).unwrap();
        for (j, v) in hat.vals.iter().enumerate() {
            let t = freqs.freq(j);
            assert!((v.re - k.density(t)).abs() < 1e-10 && v.im.abs() < 1e-10);
        }
    }

    #[test]
    fn refinement_is_stable() {
        let coarse = kernel();
        let fine = build_kernel(&KernelGrid {
            phi_step: 1.0 / 512.0,
            psi_points: 4097,
            ..KernelGrid::default()
        })
        .unwrap();
        assert!((fine.c_phi_tail - coarse.c_phi_tail).abs() < 1e-4 * coarse.c_phi_tail);
        assert!((fine.mass_defect - coarse.mass_defect).abs() < 1e-5);
        for x in [-2.0, -0.37, 0.0, 0.9, 3.3] {
            assert!((fine.smoothed_indicator(x) - coarse.smoothed_indicator(x)).abs() < 1e-7);
        }
    }
}
