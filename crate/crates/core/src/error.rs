use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: relative defect {defect:e} exceeds {tolerance:e}")]
    NotHermitian { defect: f64, tolerance: f64 },

    #[error("slot {slot} out of range for level {level} (need 1 <= slot <= level - 1)")]
    SlotOutOfRange { slot: usize, level: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("size guard exceeded: {what} needs a {rows}x{cols} matrix ({entries} entries), limit is {limit}")]
    SizeGuard {
        what: String,
        rows: usize,
        cols: usize,
        entries: u128,
        limit: usize,
    },

    #[error("non-finite entries in {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("phase function violates r(x,y) + r(y,x) = 0 mod 2pi at {0}")]
    PhaseAntisymmetry(String),

    #[error("deformation is not of anyonic type (residual {0:e})")]
    NotAnyonic(f64),

    #[error("Boltzmann factor does not commute with the degenerate metric at level {level} (defect {defect:e}); quotient trace is ill-defined")]
    CommutationViolated { level: usize, defect: f64 },

    #[error("partition sum must be positive, got {0}")]
    NonPositivePartition(f64),

    #[error("operation needs a smooth phase function; sign-kind phases have distributional gradients")]
    NonSmoothPhase,

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_size_guard(&self) -> bool {
        matches!(self, Error::SizeGuard { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
