use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("|x| = {magnitude:e} exceeds the mod-1 domain limit 2^50")]
    Mod1DomainExceeded { magnitude: f64 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty sample set")]
    EmptySamples,

    #[error("configuration violates reduction invariants: {0}")]
    ConfigViolation(String),

    #[error("numerical tolerance escalation in {context}: disagreement {disagreement:e} exceeds cap {cap:e}")]
    ToleranceEscalation {
        context: &'static str,
        disagreement: f64,
        cap: f64,
    },

    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    #[error("malformed sample data: {0}")]
    MalformedData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
