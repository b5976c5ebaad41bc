use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),
    #[error("probabilities sum to {sum}, expected 1")]
    ProbSumMismatch { sum: f64 },
    #[error("distribution has empty support")]
    EmptySupport,
    #[error("invalid parameter: {0}")]
    BadParam(String),
    #[error("scale factor must be nonzero")]
    ZeroScale,
    #[error("distribution has zero variance")]
    ZeroVariance,
    #[error("support size {atoms} exceeds cap {cap}")]
    SupportOverflow { atoms: usize, cap: usize },
    #[error("t = {t} outside admissible range |t| <= {limit}")]
    OutOfRange { t: f64, limit: f64 },
    #[error("|chf(t) - 1| = {modulus} leaves the principal-log disk at t = {t}")]
    LogBranchViolation { t: f64, modulus: f64 },
    #[error("summand variances sum to {sum}, expected 1")]
    VarianceNotNormalized { sum: f64 },
    #[error("summand has mean {mean}, expected 0")]
    MeanNotZero { mean: f64 },
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("aliasing risk: max |t| * dx = {product} exceeds 0.25")]
    AliasRisk { product: f64 },
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("quadrature exceeded depth {max_depth} on [{a}, {b}]")]
    QuadratureDepthExceeded { a: f64, b: f64, max_depth: u32 },
    #[error("empty experiment grid")]
    EmptyGrid,
    #[error("i/o error: {0}")]
    Io(String),
}

impl LabError {
    /// True for failures of the numerical machinery rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            LabError::SupportOverflow { .. }
                | LabError::LogBranchViolation { .. }
                | LabError::AliasRisk { .. }
                | LabError::QuadratureFailure(_)
                | LabError::QuadratureDepthExceeded { .. }
        )
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
