use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse config: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("unknown preset `{0}` (known: ex1_vp, ex1_lfi, ex2_unforced, ex3_constant_wind)")]
    UnknownPreset(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh mismatch: expected {expected}, got {found}")]
    MeshMismatch { expected: String, found: String },

    #[error("nonpositive thickness {0} where a positive mass floor is required")]
    NonpositiveThickness(f64),

    #[error("CFL violation: max cell outflow Courant number {cfl:.4} exceeds 1")]
    Cfl { cfl: f64 },

    #[error("diffusion stability violated: d*dt/dx^2 = {0:.4} > 0.25")]
    DiffusionStability(f64),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("non-finite value in nonlinear iterate {iteration}")]
    NotFinite { iteration: usize },

    #[error("ellipticity violation: {0}")]
    Ellipticity(String),

    #[error("incompatible runs: {0}")]
    Incompatible(String),

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
