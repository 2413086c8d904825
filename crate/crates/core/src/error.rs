use thiserror::Error;

/// Errors produced by the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {block}: expected {expected}, found {found}")]
    DimensionMismatch {
        block: String,
        expected: String,
        found: String,
    },

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("resolvent I - lambda*A is numerically singular (condition number {condition:e})")]
    SingularResolvent { condition: f64 },

    #[error("system is not exponentially stable (spectral radius {spectral_radius})")]
    Unstable { spectral_radius: f64 },

    #[error("operator is not a contraction (most negative defect eigenvalue {min_eig:e})")]
    NotContraction { min_eig: f64 },

    #[error("intermediate entry exceeds overflow guard at horizon {horizon}")]
    Overflow { horizon: usize },

    #[error("horizon doubling did not converge (horizon {horizon}, residual {residual:e})")]
    NoConvergence { horizon: usize, residual: f64 },

    #[error("gramian is singular within tolerance (condition number {condition:e})")]
    SingularGramian { condition: f64 },

    #[error("matrix is not positive definite (eigenvalue ratio {ratio:e})")]
    SingularMatrix { ratio: f64 },

    #[error("matrix is not Hermitian (asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("system is not minimal (reach rank {reach_rank}, observability rank {obs_rank}, state dimension {n})")]
    NotMinimal {
        reach_rank: usize,
        obs_rank: usize,
        n: usize,
    },

    #[error("transfer function is not in the strict Schur class (H-infinity norm {hinf})")]
    NotStrictSchur { hinf: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable identifier, used in CLI error reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::NonFinite(_) => "non-finite",
            Error::SingularResolvent { .. } => "singular-resolvent",
            Error::Unstable { .. } => "unstable-system",
            Error::NotContraction { .. } => "not-a-contraction",
            Error::Overflow { .. } => "overflow",
            Error::NoConvergence { .. } => "no-convergence",
            Error::SingularGramian { .. } => "singular-gramian",
            Error::SingularMatrix { .. } => "singular-matrix",
            Error::NotHermitian { .. } => "not-hermitian",
            Error::NotMinimal { .. } => "not-minimal",
            Error::NotStrictSchur { .. } => "not-strict-schur",
            Error::Precondition(_) => "precondition",
            Error::Numerical(_) => "numerical",
            Error::Parse(_) => "parse-error",
        }
    }

    pub(crate) fn mismatch(block: &str, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            block: block.to_string(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
