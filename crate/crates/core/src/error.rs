use thiserror::Error;

/// Failure modes shared by every evaluator in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("unsupported Bessel order {0}")]
    UnsupportedOrder(f64),
    #[error("root refinement failed in bracket [{lo}, {hi}]")]
    RootFindFailure { lo: f64, hi: f64 },
    #[error("point outside the domain: {0}")]
    Domain(String),
    #[error("singular configuration: {0}")]
    Singularity(String),
    #[error("integrand not finite at node {node}")]
    IntegrandFailure { node: f64 },
    #[error("truncation insufficient at t = {t}: need t >= {t_min} (or lmax >= {required_lmax}, kmax >= {required_kmax})")]
    TruncationInsufficient {
        t: f64,
        t_min: f64,
        required_lmax: usize,
        required_kmax: usize,
    },
    #[error("evaluation at the origin is singular for this kernel")]
    OriginSingularity,
    #[error("boundary data does not match the interior trace: {0}")]
    Contract(String),
    #[error("path did not leave the ball after {steps} steps")]
    RunawayPath { steps: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl KernelError {
    /// Stable machine-readable code used in CSV error rows.
    pub fn code(&self) -> &'static str {
        match self {
            KernelError::UnsupportedOrder(_) => "UNSUPPORTED_ORDER",
            KernelError::RootFindFailure { .. } => "ROOT_FIND_FAILURE",
            KernelError::Domain(_) => "DOMAIN_ERROR",
            KernelError::Singularity(_) => "SINGULARITY",
            KernelError::IntegrandFailure { .. } => "INTEGRAND_FAILURE",
            KernelError::TruncationInsufficient { .. } => "TRUNCATION_INSUFFICIENT",
            KernelError::OriginSingularity => "ORIGIN_SINGULARITY",
            KernelError::Contract(_) => "CONTRACT_VIOLATION",
            KernelError::RunawayPath { .. } => "RUNAWAY_PATH",
            KernelError::InvalidParameter(_) => "INVALID_PARAMETER",
        }
    }
}

pub type Result<T> = std::result::Result<T, KernelError>;
