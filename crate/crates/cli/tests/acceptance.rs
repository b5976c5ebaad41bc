//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if
//! any criterion fails. Run with `cargo test -p esseen-lab --test acceptance`.

use esseen_core::bounds::{chf_integral, end_to_end_bound, lemma1_check, lemma2_check, BoundConfig, LEMMA2_SLACK};
use esseen_core::charfun::{lemma3_sweep, lemma4_sweep, ChfExpr};
use esseen_core::convolution::{normalized_summand, sum_iid, ConvolveOptions};
use esseen_core::dist::{DiscreteDist, Family};
use esseen_core::fourier::{convolution_theorem_check, double_transform_check, plancherel_check, FreqGrid};
use esseen_core::kernel::{build_kernel, Kernel, KernelGrid};
use esseen_core::kolmogorov::kolmogorov_vs_normal;
use esseen_core::normal::normal_cdf;
use esseen_core::quadrature::midpoint;
use serde_json::Value;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

// Criterion 1
const RATE_NS: &str = "4,8,16,32,64,128,256";
const SLOPE_RANGE: (f64, f64) = (-0.6, -0.4);
const MIN_R_SQUARED: f64 = 0.98;
const RATE_SECONDS: f64 = 10.0;
// Criterion 2
const SQRT_N_RANGE: (f64, f64) = (0.30, 0.50);
const SQRT_N_DRIFT: f64 = 0.15;
// Criterion 3
const GOLDEN_TOL: f64 = 1e-9;
// Criterion 4
const MAX_MASS_DEFECT: f64 = 1e-6;
const MIN_PHI: f64 = -1e-9;
const MAX_SUPPORT_LEAK: f64 = 1e-6;
const KERNEL_SECONDS: f64 = 5.0;
// Criterion 5
const FOURIER_TOL: f64 = 1e-6;
// Criteria 6 and 7
const SMOOTHING_NS: [u64; 3] = [1, 4, 16];
const SMOOTHING_EPS: [f64; 3] = [0.5, 0.2, 0.1];
// Criterion 8
const LEMMA3_POINTS: usize = 1000;
const THETA_STABILITY: f64 = 0.01;
const LOG_DISK_RADIUS: f64 = 2.0 / 3.0;
// Criterion 9
const LEMMA4_NS: [u64; 3] = [16, 64, 256];
const LEMMA4_POINTS: usize = 1000;
const LAMBDA_STABILITY: f64 = 0.05;
// Criterion 10
const SUITE_NS: [u64; 9] = [1, 2, 4, 8, 16, 32, 64, 128, 256];
// Criterion 11
const MIDPOINT_CELLS: usize = 1_000_000;
const ORACLE_TOL: f64 = 1e-7;
const SUITE_SECONDS: f64 = 60.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn suite_families() -> [Family; 3] {
    [
        Family::Rademacher,
        Family::CenteredBernoulli { p: 0.3 },
        Family::TwoPoint { x1: -2.0, x2: 1.0 },
    ]
}

fn summands(f: &Family, n: u64) -> Vec<DiscreteDist> {
    vec![normalized_summand(&f.build().unwrap(), n).unwrap(); n as usize]
}

fn normalized_sum(f: &Family, n: u64) -> DiscreteDist {
    let x = normalized_summand(&f.build().unwrap(), n).unwrap();
    sum_iid(&x, n, &ConvolveOptions::default()).unwrap()
}

fn kernel() -> &'static (Kernel, f64) {
    static K: OnceLock<(Kernel, f64)> = OnceLock::new();
    K.get_or_init(|| {
        let start = Instant::now();
        let k = build_kernel(&KernelGrid::default()).expect("kernel builds");
        (k, start.elapsed().as_secs_f64())
    })
}

fn lab(args: &[&str]) -> (Vec<u8>, f64) {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_esseen-lab"))
        .args(args)
        .env_remove("ESSEEN_LAB_CONFIG")
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (out.stdout, start.elapsed().as_secs_f64())
}

fn rate_reproduction() -> Outcome {
    let (stdout, secs) = lab(&["rate", "--family", "rademacher", "--n", RATE_NS]);
    let v: Value = serde_json::from_slice(&stdout).unwrap();
    let slope = v["result"]["fit"]["slope"].as_f64().unwrap();
    let r2 = v["result"]["fit"]["r_squared"].as_f64().unwrap();
    outcome(
        (SLOPE_RANGE.0..=SLOPE_RANGE.1).contains(&slope) && r2 >= MIN_R_SQUARED && secs < RATE_SECONDS,
        format!("slope {slope:.4}, r² {r2:.5}, {secs:.2} s"),
    )
}

/// Exact distance of (2K − n)/√n, K ~ Binomial(n, 1/2), to the normal,
/// from Pascal's triangle and both one-sided limits at every atom.
fn binomial_oracle(n: usize) -> f64 {
    let mut row = vec![1.0f64];
    for _ in 0..n {
        let mut next = vec![0.5 * row[0]];
        for w in row.windows(2) {
            next.push(0.5 * (w[0] + w[1]));
        }
        next.push(0.5 * row[row.len() - 1]);
        row = next;
    }
    let mut below = 0.0;
    let mut best: f64 = 0.0;
    for (k, p) in row.iter().enumerate() {
        let x = (2.0 * k as f64 - n as f64) / (n as f64).sqrt();
        best = best.max((below - normal_cdf(x)).abs());
        below += p;
        best = best.max((below - normal_cdf(x)).abs());
    }
    best
}

fn sqrt_n_distance() -> Outcome {
    let at = |n: u64| kolmogorov_vs_normal(&normalized_sum(&Family::Rademacher, n)).distance * (n as f64).sqrt();
    let (s64, s256) = (at(64), at(256));
    let oracle_gap = [64usize, 256]
        .iter()
        .map(|&n| (binomial_oracle(n) * (n as f64).sqrt() - at(n as u64)).abs())
        .fold(0.0, f64::max);
    let drift = (s256 - s64).abs() / s64;
    outcome(
        (SQRT_N_RANGE.0..=SQRT_N_RANGE.1).contains(&s256) && drift < SQRT_N_DRIFT && oracle_gap < 1e-12,
        format!("√n·d at 64: {s64:.6}, at 256: {s256:.6}, drift {:.2}%, oracle gap {oracle_gap:.1e}", 100.0 * drift),
    )
}

fn golden_distances() -> Outcome {
    let pm = kolmogorov_vs_normal(&DiscreteDist::point_mass(0.0)).distance;
    let rad = kolmogorov_vs_normal(&Family::Rademacher.build().unwrap()).distance;
    let err = (rad - (normal_cdf(1.0) - 0.5)).abs();
    outcome(pm == 0.5 && err <= GOLDEN_TOL, format!("point mass {pm}, rademacher {rad:.12} (err {err:.1e})"))
}

fn kernel_construction() -> Outcome {
    let (k, secs) = kernel();
    let s = k.summary();
    outcome(
        s.mass_defect <= MAX_MASS_DEFECT && s.min_phi >= MIN_PHI && s.support_check <= MAX_SUPPORT_LEAK && *secs < KERNEL_SECONDS,
        format!(
            "mass defect {:.2e}, min φ {:.2e}, support leak {:.2e}, C_φ {:.4}, build {secs:.2} s",
            s.mass_defect, s.min_phi, s.support_check, s.c_phi_tail
        ),
    )
}

fn fourier_identities() -> Outcome {
    let psi = &kernel().0.psi;
    let (lhs, rhs) = plancherel_check(psi).unwrap();
    let plancherel = (lhs - rhs).abs() / lhs;
    let freqs = FreqGrid::symmetric(64.0, 1.0 / 16.0);
    let conv = convolution_theorem_check(psi, psi, &freqs).unwrap();
    let double = double_transform_check(psi).unwrap();
    outcome(
        plancherel <= FOURIER_TOL && conv <= FOURIER_TOL && double <= FOURIER_TOL,
        format!("Plancherel rel {plancherel:.1e}, convolution {conv:.1e}, double transform {double:.1e}"),
    )
}

fn lemma1_suite() -> Outcome {
    let k = &kernel().0;
    let mut violations = 0;
    let mut worst_margin = f64::INFINITY;
    for n in SMOOTHING_NS {
        let d = normalized_sum(&Family::Rademacher, n);
        for eps in SMOOTHING_EPS {
            let c = lemma1_check(&d, k, eps).unwrap();
            if !c.holds {
                violations += 1;
            }
            worst_margin = worst_margin.min(2.0 * c.sup_smoothed + c.tail - c.distance);
        }
    }
    outcome(violations == 0, format!("{violations} violations, smallest margin {worst_margin:.4}"))
}

fn lemma2_suite() -> Outcome {
    let k = &kernel().0;
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for n in SMOOTHING_NS {
        let d = normalized_sum(&Family::Rademacher, n);
        for eps in SMOOTHING_EPS {
            let (lhs, rhs) = lemma2_check(&d, k, eps, 1e-9).unwrap();
            if lhs > rhs + LEMMA2_SLACK {
                violations += 1;
            }
            worst = worst.min(rhs - lhs);
        }
    }
    outcome(violations == 0, format!("{violations} violations, smallest margin {worst:.4e}"))
}

fn lemma3_regime() -> Outcome {
    let mut violations = 0;
    let mut branch_errors = 0;
    let mut max_z: f64 = 0.0;
    let mut worst_drift: f64 = 0.0;
    let mut theta_star: f64 = 0.0;
    for f in suite_families() {
        for n in [1u64, 16, 256] {
            let d = normalized_summand(&f.build().unwrap(), n).unwrap();
            match (lemma3_sweep(&d, LEMMA3_POINTS), lemma3_sweep(&d, 2 * LEMMA3_POINTS)) {
                (Ok(coarse), Ok(fine)) => {
                    violations += coarse.a2_le_b_violations + coarse.b_le_1_violations;
                    violations += fine.a2_le_b_violations + fine.b_le_1_violations;
                    max_z = max_z.max(coarse.max_z_modulus).max(fine.max_z_modulus);
                    theta_star = theta_star.max(coarse.theta_max);
                    if !coarse.theta_max.is_finite() {
                        violations += 1;
                    }
                    worst_drift = worst_drift.max((fine.theta_max - coarse.theta_max).abs() / coarse.theta_max);
                }
                _ => branch_errors += 1,
            }
        }
    }
    outcome(
        violations == 0 && branch_errors == 0 && max_z <= LOG_DISK_RADIUS && worst_drift <= THETA_STABILITY,
        format!(
            "{violations} range violations, {branch_errors} log-branch failures, max |φ−1| {max_z:.4}, Θ* {theta_star:.6}, refinement drift {:.3}%",
            100.0 * worst_drift
        ),
    )
}

fn lemma4_envelope() -> Outcome {
    let c_small = BoundConfig::default().c_small;
    let mut per_n = Vec::new();
    let mut refine_drift: f64 = 0.0;
    for n in LEMMA4_NS {
        let ds = summands(&Family::Rademacher, n);
        let coarse = lemma4_sweep(&ds, c_small, LEMMA4_POINTS).unwrap().ratio_max;
        let fine = lemma4_sweep(&ds, c_small, 2 * LEMMA4_POINTS).unwrap().ratio_max;
        refine_drift = refine_drift.max((fine - coarse).abs() / coarse);
        per_n.push(coarse);
    }
    let reference = per_n[0];
    let cross_n = per_n.iter().map(|v| (v - reference).abs() / reference).fold(0.0, f64::max);
    let finite = per_n.iter().all(|v| v.is_finite() && *v > 0.0);
    let listing: Vec<String> = LEMMA4_NS.iter().zip(&per_n).map(|(n, v)| format!("n={n}: {v:.5}")).collect();
    outcome(
        finite && refine_drift <= LAMBDA_STABILITY && cross_n <= LAMBDA_STABILITY,
        format!(
            "Λ* {}; refinement drift {:.2}%, spread across n {:.1}%",
            listing.join(", "),
            100.0 * refine_drift,
            100.0 * cross_n
        ),
    )
}

fn end_to_end() -> Outcome {
    let k = &kernel().0;
    let cfg = BoundConfig::default();
    let mut violations = 0;
    let mut cells = 0;
    let mut worst_ratio: f64 = 0.0;
    for f in suite_families() {
        for n in SUITE_NS {
            let r = end_to_end_bound(&summands(&f, n), k, &cfg).unwrap();
            cells += 1;
            if r.lhs > r.rhs {
                violations += 1;
            }
            worst_ratio = worst_ratio.max(r.lhs / r.rhs);
        }
    }
    let ns = SUITE_NS.map(|n| n.to_string()).join(",");
    let (a, _) = lab(&["constant-scan", "--n", &ns, "--threads", "1"]);
    let (b, _) = lab(&["constant-scan", "--n", &ns, "--threads", "4"]);
    let (c, _) = lab(&["constant-scan", "--n", &ns, "--threads", "1"]);
    let v: Value = serde_json::from_slice(&a).unwrap();
    let constant = v["result"]["constant"].as_f64().unwrap_or(f64::NAN);
    let stable = a == b && a == c && constant.is_finite() && constant > 0.0;
    outcome(
        violations == 0 && stable,
        format!(
            "{violations}/{cells} cells violated, largest lhs/rhs {worst_ratio:.4}; empirical constant {constant:.6} (byte-identical: {})",
            a == b && a == c
        ),
    )
}

fn quadrature_oracle() -> Outcome {
    let g = ChfExpr::StandardNormal;
    let c_small = BoundConfig::default().c_small;
    // (law, ε) at the end-to-end window 1/ε = c/ρ³
    let cases = [
        (ChfExpr::DiscreteAtoms(normalized_sum(&Family::Rademacher, 16)), 0.25 / c_small),
        (ChfExpr::DiscreteAtoms(normalized_sum(&Family::CenteredBernoulli { p: 0.3 }, 64)), {
            let x = normalized_summand(&Family::CenteredBernoulli { p: 0.3 }.build().unwrap(), 64).unwrap();
            64.0 * x.moments().abs3 / c_small
        }),
        (ChfExpr::product_of(&summands(&Family::TwoPoint { x1: -2.0, x2: 1.0 }, 256)), {
            let x = normalized_summand(&Family::TwoPoint { x1: -2.0, x2: 1.0 }.build().unwrap(), 256).unwrap();
            256.0 * x.moments().abs3 / c_small
        }),
    ];
    let mut worst: f64 = 0.0;
    for (x, eps) in &cases {
        let adaptive = chf_integral(x, &g, *eps, 1e-9).unwrap();
        let oracle = 2.0 * midpoint(|t| ((x.eval(t) - g.eval(t)) / t).norm(), 0.0, 1.0 / eps, MIDPOINT_CELLS);
        worst = worst.max((adaptive - oracle).abs());
    }
    outcome(worst <= ORACLE_TOL, format!("max |adaptive − midpoint| {worst:.2e} over {} cases", cases.len()))
}

fn main() {
    let start = Instant::now();
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("rate reproduction", rate_reproduction),
        ("√n-scaled Rademacher distance", sqrt_n_distance),
        ("exact distance golden values", golden_distances),
        ("kernel construction", kernel_construction),
        ("Fourier identities", fourier_identities),
        ("first smoothing inequality", lemma1_suite),
        ("second smoothing inequality", lemma2_suite),
        ("remainder regime a² ≤ |b| ≤ 1", lemma3_regime),
        ("characteristic-function envelope", lemma4_envelope),
        ("end-to-end bound", end_to_end),
        ("quadrature oracle agreement", quadrature_oracle),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run));
        let secs = t0.elapsed().as_secs_f64();
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        if !pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {detail} [{secs:.2} s]", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    let total = start.elapsed().as_secs_f64();
    let in_time = total < SUITE_SECONDS;
    if !in_time {
        failed += 1;
    }
    println!("{} suite runtime {total:.2} s (limit {SUITE_SECONDS} s)", if in_time { "PASS" } else { "FAIL" });
    println!("{} of {} checks failed", failed, criteria.len() + 1);
    if failed > 0 {
        std::process::exit(1);
    }
}
