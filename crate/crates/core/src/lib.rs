//! Exact computations around the Berry–Esseen theorem: finite-support
//! laws and their sums, characteristic functions, a compactly
//! band-limited smoothing kernel, Kolmogorov distances and the right-hand
//! sides of Esseen's smoothing inequality.

pub mod bounds;
pub mod charfun;
pub mod config;
pub mod convolution;
pub mod dist;
pub mod error;
pub mod experiments;
pub mod fourier;
pub mod kernel;
pub mod kolmogorov;
pub mod normal;
pub mod quadrature;
pub mod report;

pub use bounds::{berry_esseen_rhs, chf_integral, end_to_end_bound, esseen_rhs, BoundConfig, BoundReport};
pub use charfun::{chf_eval, lemma3_remainder, lemma4_gap, ChfExpr, RemainderReport};
pub use config::LabConfig;
pub use convolution::{convolve, sum_iid, sum_independent, ConvolveOptions};
pub use dist::{make_discrete, DiscreteDist, DistSpec, Family, MomentSummary};
pub use error::{LabError, Result};
pub use experiments::{constant_scan, rate_experiment, FitResult, RateRow};
pub use fourier::{FreqGrid, GridFunction};
pub use kernel::{build_kernel, Kernel, KernelGrid};
pub use kolmogorov::{kolmogorov_discrete, kolmogorov_vs_normal, DistanceReport, SupSide};
pub use normal::{normal_cdf, NormalRef};
pub use report::{emit_report, ReportFormat};
