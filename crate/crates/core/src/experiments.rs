//! Rate-of-convergence experiments and empirical Berry–Esseen constants.

use crate::convolution::{normalized_summand, sum_iid, ConvolveOptions};
use crate::dist::DistSpec;
use crate::error::{LabError, Result};
use crate::kolmogorov::kolmogorov_vs_normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: u64,
    pub distance: f64,
    pub sqrt_n_distance: f64,
    /// Σ E|X_k|³ for X_k = Y_k/√n with Y standardized.
    pub be_rhs: f64,
    /// distance / be_rhs
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateExperiment {
    pub family: String,
    pub rows: Vec<RateRow>,
    /// Least-squares fit of ln(distance) on ln(n); absent with fewer than
    /// two distinct n or a zero distance.
    pub fit: Option<FitResult>,
}

fn check_n_list(n_list: &[u64]) -> Result<()> {
    if n_list.is_empty() {
        return Err(LabError::EmptyGrid);
    }
    if n_list.contains(&0) {
        return Err(LabError::BadParam("every n must be at least 1".into()));
    }
    if n_list.windows(2).any(|w| w[0] > w[1]) {
        return Err(LabError::BadParam("n list must be sorted".into()));
    }
    Ok(())
}

/// Exact row for (Y_1 + ⋯ + Y_n)/√n with Y the standardized `spec`.
pub fn rate_row(spec: &DistSpec, n: u64) -> Result<RateRow> {
    let y = spec.build()?;
    let x = normalized_summand(&y, n)?;
    let sum = sum_iid(&x, n, &ConvolveOptions::default())?;
    let distance = kolmogorov_vs_normal(&sum).distance;
    let be_rhs = n as f64 * x.moments().abs3;
    Ok(RateRow {
        n,
        distance,
        sqrt_n_distance: distance * (n as f64).sqrt(),
        be_rhs,
        ratio: distance / be_rhs,
    })
}

/// Ordinary least squares of y on x.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(LabError::BadParam("a line fit needs at least two paired points".into()));
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(LabError::BadParam("a line fit needs two distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(FitResult {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

pub fn rate_experiment(spec: &DistSpec, n_list: &[u64]) -> Result<RateExperiment> {
    check_n_list(n_list)?;
    let rows: Vec<RateRow> = n_list.par_iter().map(|&n| rate_row(spec, n)).collect::<Result<_>>()?;
    let fit = if rows.iter().all(|r| r.distance > 0.0) {
        let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.distance.ln()).collect();
        fit_line(&xs, &ys).ok()
    } else {
        None
    };
    Ok(RateExperiment {
        family: spec.label(),
        rows,
        fit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub family: String,
    #[serde(flatten)]
    pub row: RateRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantScan {
    /// max over cells of distance / Σρ_k³: the least C for which the
    /// Berry–Esseen inequality holds on every cell.
    pub constant: f64,
    pub argmax_family: String,
    pub argmax_n: u64,
    /// Sorted by family label, then n.
    pub cells: Vec<ScanCell>,
}

pub fn constant_scan(specs: &[DistSpec], n_list: &[u64]) -> Result<ConstantScan> {
    if specs.is_empty() {
        return Err(LabError::EmptyGrid);
    }
    check_n_list(n_list)?;
    let jobs: Vec<(&DistSpec, u64)> = specs.iter().flat_map(|s| n_list.iter().map(move |&n| (s, n))).collect();
    let mut cells: Vec<ScanCell> = jobs
        .par_iter()
        .map(|&(s, n)| {
            Ok(ScanCell {
                family: s.label(),
                row: rate_row(s, n)?,
            })
        })
        .collect::<Result<_>>()?;
    cells.sort_by(|a, b| a.family.cmp(&b.family).then(a.row.n.cmp(&b.row.n)));
    let mut best = 0;
    for (i, c) in cells.iter().enumerate() {
        if c.row.ratio > cells[best].row.ratio {
            best = i;
        }
    }
    Ok(ConstantScan {
        constant: cells[best].row.ratio,
        argmax_family: cells[best].family.clone(),
        argmax_n: cells[best].row.n,
        cells,
    })
}
