//! The standard normal law, the only continuous distribution in the crate.

use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

/// 1/√(2π), the supremum of the standard normal density.
pub const NORMAL_DENSITY_MAX: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF Φ(x).
///
/// Uses the FreeBSD-derived `erfc` from `libm`, which is accurate to about
/// one ulp; going through `erfc` keeps full relative accuracy in the left tail.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    NORMAL_DENSITY_MAX * (-0.5 * x * x).exp()
}

/// Characteristic function of N(0,1): e^{-t²/2}.
pub fn normal_chf(t: f64) -> f64 {
    (-0.5 * t * t).exp()
}

/// Handle for the standard normal reference law G.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NormalRef;

impl NormalRef {
    pub fn cdf(&self, x: f64) -> f64 {
        normal_cdf(x)
    }

    pub fn density(&self, x: f64) -> f64 {
        normal_pdf(x)
    }

    pub fn chf(&self, t: f64) -> Complex64 {
        Complex64::new(normal_chf(t), 0.0)
    }

    /// Bound M on the density used by the smoothing inequalities.
    pub fn density_bound(&self) -> f64 {
        NORMAL_DENSITY_MAX
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    // Composite Simpson on the density, independent of erfc.
    fn simpson_cdf(x: f64) -> f64 {
        let n = 20_000;
        let (a, b) = if x >= 0.0 { (0.0, x) } else { (x, 0.0) };
        let h = (b - a) / n as f64;
        let mut s = normal_pdf(a) + normal_pdf(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * normal_pdf(a + i as f64 * h);
        }
        let part = s * h / 3.0;
        if x >= 0.0 {
            0.5 + part
        } else {
            0.5 - part
        }
    }

    #[test]
    fn density_max_constant() {
        assert!((NORMAL_DENSITY_MAX - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-16);
        assert!(NORMAL_DENSITY_MAX <= 0.398_942_3);
    }

    #[test]
    fn cdf_golden_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        // Frozen from the Simpson oracle below (20k panels).
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-12);
        assert!((simpson_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-12);
        assert!((normal_cdf(-1.0) - (1.0 - normal_cdf(1.0))).abs() < 1e-15);
    }

    #[test]
    fn cdf_matches_quadrature_oracle_on_grid() {
        for i in -60..=60 {
            let x = i as f64 * 0.1;
            assert!((normal_cdf(x) - simpson_cdf(x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn cdf_symmetry_and_monotonicity() {
        let mut prev = 0.0;
        for i in -400..=400 {
            let x = i as f64 * 0.02;
            let c = normal_cdf(x);
            assert!((c + normal_cdf(-x) - 1.0).abs() < 1e-12);
            assert!(c > prev);
            prev = c;
        }
    }

    #[test]
    fn chf_at_one() {
        assert!((NormalRef.chf(1.0).re - (-0.5f64).exp()).abs() < 1e-16);
        assert!((normal_chf(1.0) - 0.606_530_659_712_633_4).abs() < 1e-15);
    }
}
