use thiserror::Error;

use crate::linalg::Rank1Factorization;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate matrix")]
    DegenerateMatrix,

    /// Power iteration ran out of iterations; the last iterate is still usable
    /// as a direction estimate.
    #[error("power iteration did not converge within {iterations} iterations")]
    NotConverged {
        iterations: usize,
        last: Box<Rank1Factorization>,
    },

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite input in {0}")]
    NonFinite(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("action {action} out of range for {arms} arms")]
    ActionOutOfRange { action: usize, arms: usize },

    #[error("horizon exceeded: round {round} > T = {horizon}")]
    HorizonExceeded { round: usize, horizon: usize },

    #[error("contexts for round {0} have not been sampled")]
    ContextsNotSampled(usize),

    #[error("insufficient history: need {needed} rounds, have {available}")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("all-zero window")]
    EmptyWindow,

    #[error("mass unreachable: mu = {mu} exceeds ||w||_2 = {norm}")]
    MassUnreachable { mu: f64, norm: f64 },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag, used by the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateMatrix => "degenerate_matrix",
            Error::NotConverged { .. } => "not_converged",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NonFinite(_) => "non_finite_input",
            Error::Domain(_) => "domain",
            Error::InvalidConfig { .. } => "invalid_config",
            Error::ActionOutOfRange { .. } => "action_out_of_range",
            Error::HorizonExceeded { .. } => "horizon_exceeded",
            Error::ContextsNotSampled(_) => "contexts_not_sampled",
            Error::InsufficientHistory { .. } => "insufficient_history",
            Error::EmptyWindow => "empty_window",
            Error::MassUnreachable { .. } => "mass_unreachable",
            Error::UnknownPreset(_) => "unknown_preset",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
