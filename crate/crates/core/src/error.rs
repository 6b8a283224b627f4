use thiserror::Error;

use crate::field::Repr;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field is in {found:?} representation, expected {expected:?}")]
    WrongRepr { expected: Repr, found: Repr },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value encountered in {context} at t = {t}")]
    NonFinite { context: &'static str, t: f64 },

    #[error("solver diverged at t = {t}{}", dump.as_ref().map(|p| format!("; last good state written to {}", p.display())).unwrap_or_default())]
    Diverged { t: f64, dump: Option<std::path::PathBuf> },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid norm spec: {0}")]
    InvalidNormSpec(String),

    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),

    #[error("too few samples in fit window: need {needed}, have {have}")]
    TooFewSamples { needed: usize, have: usize },

    #[error("series value at t = {t} is not positive ({value})")]
    NonPositive { t: f64, value: f64 },

    #[error("no valid fit window")]
    NoValidWindow,

    #[error("insufficient sampling density: {0}")]
    InsufficientSampling(String),

    #[error("ODE integration failed: {0}")]
    Integration(String),

    #[error("budget exhausted: {0}")]
    Budget(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
