use thiserror::Error;

use crate::model::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid {what}: {}", join_violations(.violations))]
    Invalid {
        what: String,
        violations: Vec<Violation>,
    },

    #[error("unknown component `{0}`")]
    UnknownComponent(String),

    #[error("duplicate component `{0}`")]
    DuplicateComponent(String),

    #[error("unsupported goal `{0}`: battery degradation over time is not modeled")]
    UnsupportedGoal(String),

    #[error("stealth level not configured for component `{0}`")]
    StealthNotConfigured(String),

    #[error("plan is infeasible on this device: {0}")]
    Infeasible(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("{what} did not reach its target within {cap_minutes} simulated minutes")]
    NonTerminating { what: String, cap_minutes: f64 },

    #[error("malformed document: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn invalid(what: impl Into<String>, violations: Vec<Violation>) -> Self {
        Error::Invalid {
            what: what.into(),
            violations,
        }
    }
}
