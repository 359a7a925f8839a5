use thiserror::Error;

/// Every failure the library can report. `is_numerical` separates data or
/// model degeneracy from malformed input, which the CLI maps to exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GlhtError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("ingestion error: {0}")]
    Ingestion(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("insufficient replication: group {group} has n = {n}, need n >= {required}")]
    InsufficientReplication { group: usize, n: usize, required: usize },
    #[error("contrast matrix is rank deficient (smallest/largest singular value = {ratio:.3e})")]
    ContrastRank { ratio: f64 },
    #[error("singular error matrix: the pooled covariance estimate has smallest/largest eigenvalue {ratio:.3e}; collect more curves per group or use fewer components")]
    SingularOmega { ratio: f64 },
    #[error("matrix is not positive definite (smallest/largest eigenvalue = {ratio:.3e})")]
    NotPositiveDefinite { ratio: f64 },
    #[error("singular error matrix: {0}")]
    SingularErrorMatrix(String),
    #[error("degenerate degrees of freedom: {0}")]
    DegenerateDof(String),
    #[error("{statistic} F-approximation undefined: {detail}")]
    ApproximationUndefined { statistic: &'static str, detail: String },
}

impl GlhtError {
    /// True for failures caused by degenerate data rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            GlhtError::SingularOmega { .. }
                | GlhtError::NotPositiveDefinite { .. }
                | GlhtError::SingularErrorMatrix(_)
                | GlhtError::DegenerateDof(_)
                | GlhtError::ApproximationUndefined { .. }
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            GlhtError::InvalidArgument(_) => "invalid_argument",
            GlhtError::Ingestion(_) => "ingestion",
            GlhtError::Validation(_) => "validation",
            GlhtError::InsufficientReplication { .. } => "insufficient_replication",
            GlhtError::ContrastRank { .. } => "contrast_rank",
            GlhtError::SingularOmega { .. } => "singular_omega",
            GlhtError::NotPositiveDefinite { .. } => "not_positive_definite",
            GlhtError::SingularErrorMatrix(_) => "singular_error_matrix",
            GlhtError::DegenerateDof(_) => "degenerate_dof",
            GlhtError::ApproximationUndefined { .. } => "approximation_undefined",
        }
    }
}

pub type Result<T> = std::result::Result<T, GlhtError>;
