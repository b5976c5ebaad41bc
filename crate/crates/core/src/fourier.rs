//! Uniform-grid functions and their trapezoidal Fourier transforms, with
//! the `ĝ(t) = ∫ e^{−2πitx} g(x) dx` convention.

use crate::error::{LabError, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Largest admissible `max|t|·dx` before a transform is refused.
pub const ALIAS_LIMIT: f64 = 0.25;

/// Samples `vals[i] = g(x0 + i·dx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T = f64> {
    pub x0: f64,
    pub dx: f64,
    pub vals: Vec<T>,
}

impl<T: Copy> GridFunction<T> {
    pub fn new(x0: f64, dx: f64, vals: Vec<T>) -> Result<Self> {
        if !(dx > 0.0) || !x0.is_finite() || !dx.is_finite() {
            return Err(LabError::BadParam(format!("grid needs finite x0 and dx > 0, got ({x0}, {dx})")));
        }
        Ok(Self { x0, dx, vals })
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn x_last(&self) -> f64 {
        self.x(self.len().saturating_sub(1))
    }

    /// Trapezoid weight of sample `i` (a lone sample gets weight 1).
    pub fn weight(&self, i: usize) -> f64 {
        let n = self.len();
        if n > 1 && (i == 0 || i + 1 == n) {
            0.5
        } else {
            1.0
        }
    }

    fn is_symmetric(&self) -> bool {
        (self.x0 + self.x_last()).abs() <= 1e-12 * self.x0.abs().max(self.dx)
    }
}

impl GridFunction<f64> {
    pub fn from_fn<F: Fn(f64) -> f64>(x0: f64, dx: f64, n: usize, f: F) -> Result<Self> {
        let vals = (0..n).map(|i| f(x0 + i as f64 * dx)).collect();
        Self::new(x0, dx, vals)
    }

    pub fn integral(&self) -> f64 {
        self.vals.iter().enumerate().map(|(i, v)| self.weight(i) * v).sum::<f64>() * self.dx
    }

    pub fn to_complex(&self) -> GridFunction<Complex64> {
        GridFunction {
            x0: self.x0,
            dx: self.dx,
            vals: self.vals.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }
}

/// Equally spaced frequencies `start + k·step`, k = 0..count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqGrid {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl FreqGrid {
    pub fn new(start: f64, step: f64, count: usize) -> Self {
        Self { start, step, count }
    }

    /// Symmetric grid on [−half_width, half_width] with the given step.
    pub fn symmetric(half_width: f64, step: f64) -> Self {
        let k = (half_width / step).floor() as usize;
        Self {
            start: -(k as f64) * step,
            step,
            count: 2 * k + 1,
        }
    }

    pub fn freq(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn max_abs(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.start.abs().max(self.freq(self.count - 1).abs())
        }
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.freq(k)).collect()
    }

    /// A frequency grid wide enough that |ĝ| has decayed for smooth `g`,
    /// and fine enough to integrate |ĝ|² exactly for compactly supported g.
    pub fn wide_for<T: Copy>(g: &GridFunction<T>) -> Self {
        let width = (g.len().max(1) as f64) * g.dx;
        Self::symmetric(0.249 / g.dx, 1.0 / (8.0 * width))
    }
}

fn check_alias<T: Copy>(g: &GridFunction<T>, max_t: f64) -> Result<()> {
    let product = max_t * g.dx;
    if product > ALIAS_LIMIT {
        return Err(LabError::AliasRisk { product });
    }
    Ok(())
}

fn transform_point<T: Copy + Into<Complex64>>(g: &GridFunction<T>, t: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &v) in g.vals.iter().enumerate() {
        let (s, c) = (-2.0 * PI * t * g.x(i)).sin_cos();
        acc += Complex64::new(c, s) * (g.weight(i) * v.into());
    }
    acc * g.dx
}

/// ĝ(t) at a single frequency by the trapezoidal rule.
pub fn fourier_at<T: Copy + Into<Complex64>>(g: &GridFunction<T>, t: f64) -> Result<Complex64> {
    check_alias(g, t.abs())?;
    Ok(transform_point(g, t))
}

/// ĝ on a uniform frequency grid, trapezoidal rule. The error for smooth
/// compactly supported g is O(dx²) per frequency (spectrally small in
/// practice, since the endpoint corrections vanish).
pub fn fourier_grid<T>(g: &GridFunction<T>, freqs: &FreqGrid) -> Result<GridFunction<Complex64>>
where
    T: Copy + Into<Complex64> + Sync,
{
    check_alias(g, freqs.max_abs())?;
    let vals: Vec<Complex64> = (0..freqs.count)
        .into_par_iter()
        .map(|k| transform_point(g, freqs.freq(k)))
        .collect();
    GridFunction::new(freqs.start, freqs.step, vals)
}

/// (∫|g|², ∫|ĝ|²), both by the trapezoidal rule.
pub fn plancherel_check(g: &GridFunction<f64>) -> Result<(f64, f64)> {
    let lhs = g.vals.iter().enumerate().map(|(i, v)| g.weight(i) * v * v).sum::<f64>() * g.dx;
    if g.vals.iter().all(|&v| v == 0.0) {
        return Ok((lhs, 0.0));
    }
    let hat = fourier_grid(g, &FreqGrid::wide_for(g))?;
    let rhs = hat.vals.iter().enumerate().map(|(i, v)| hat.weight(i) * v.norm_sqr()).sum::<f64>() * hat.dx;
    Ok((lhs, rhs))
}

/// Riemann-sum convolution `(g1 ∗ g2)(x0_1 + x0_2 + k·dx)` of two grids
/// with the same spacing.
pub fn grid_convolve(g1: &GridFunction<f64>, g2: &GridFunction<f64>) -> Result<GridFunction<f64>> {
    if (g1.dx - g2.dx).abs() > 1e-12 * g1.dx {
        return Err(LabError::BadParam(format!("grid spacings differ: {} vs {}", g1.dx, g2.dx)));
    }
    if g1.is_empty() || g2.is_empty() {
        return Err(LabError::BadParam("empty grid".into()));
    }
    let mut out = vec![0.0; g1.len() + g2.len() - 1];
    for (i, &a) in g1.vals.iter().enumerate() {
        for (o, &b) in out[i..].iter_mut().zip(&g2.vals) {
            *o += a * b;
        }
    }
    out.iter_mut().for_each(|v| *v *= g1.dx);
    GridFunction::new(g1.x0 + g2.x0, g1.dx, out)
}

/// max over `freqs` of |FT(g1 ∗ g2)(t) − ĝ1(t)·ĝ2(t)|.
pub fn convolution_theorem_check(g1: &GridFunction<f64>, g2: &GridFunction<f64>, freqs: &FreqGrid) -> Result<f64> {
    let conv = grid_convolve(g1, g2)?;
    let lhs = fourier_grid(&conv, freqs)?;
    let h1 = fourier_grid(g1, freqs)?;
    let h2 = fourier_grid(g2, freqs)?;
    Ok(lhs
        .vals
        .iter()
        .zip(h1.vals.iter().zip(&h2.vals))
        .map(|(l, (a, b))| (l - a * b).norm())
        .fold(0.0, f64::max))
}

/// max_j |ĝ̂(x_j) − g(−x_j)| for g on a grid symmetric about 0.
pub fn double_transform_check(g: &GridFunction<f64>) -> Result<f64> {
    if !g.is_symmetric() {
        return Err(LabError::BadParam("double transform check needs a grid symmetric about 0".into()));
    }
    let hat = fourier_grid(g, &FreqGrid::wide_for(g))?;
    check_alias(&hat, g.x0.abs().max(g.x_last().abs()))?;
    let n = g.len();
    let errs: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| (transform_point(&hat, g.x(j)) - Complex64::new(g.vals[n - 1 - j], 0.0)).norm())
        .collect();
    Ok(errs.into_iter().fold(0.0, f64::max))
}
