use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("regularized energy needs the second gradient of the director")]
    MissingSecondGradient,

    #[error("test field is not divergence free (max |k·ŵ(k)| = {defect:e})")]
    NotDivergenceFree { defect: f64 },

    #[error("young transform argument outside the open unit ball (|h̃| = {h_norm}, |S̃| = {s_norm})")]
    OutsideUnitBall { h_norm: f64, s_norm: f64 },

    #[error("non-finite coefficient encountered at t = {t}")]
    BlowUp { t: f64 },

    #[error("time step {dt:e} exceeds the CFL guard {limit:e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("grid mismatch: expected N = {expected}, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("configuration rejected:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
