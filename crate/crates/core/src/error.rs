use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the tracking pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point is behind the camera (depth {depth:.3e} mm)")]
    BehindCamera { depth: f64 },

    #[error("degenerate cylinder view: camera center is inside or on the cylinder (C = {c:.3e})")]
    DegenerateView { c: f64 },

    #[error("degenerate cylinder axis: both silhouette line coefficient triples vanish")]
    DegenerateAxis,

    #[error("invalid line: normal vector is zero")]
    InvalidLine,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("degenerate filter: {0}")]
    DegenerateFilter(String),

    #[error("empty summary window: no rows after burn-in step {burn_in}")]
    EmptyWindow { burn_in: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} must be finite")))
    }
}
