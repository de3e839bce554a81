//! Frequency-domain acoustic waveform inversion on 2D grids.
//!
//! The crate solves the Helmholtz equation `A(m) u = (Δ + ω² C diag(m) B) u = b`
//! for squared slowness `m`, reconstructs wavefields from sparse receiver data
//! through the penalty system `(λ AᴴA + PᴴP) u = λ Aᴴb + Pᴴd`, and updates the
//! model either by complex least squares (IR-WRI) or by a phase-retrieval step
//! that fits magnitudes only (WIPR). A compound TV + Tikhonov regularizer with
//! split-Bregman inner iterations is available for both modes.
//!
//! Everything numeric is generic over the real scalar type via [`Scalar`];
//! concrete f64 aliases are exported below. The `wipr` binary drives the same
//! code through model/forward/invert/bilinear/report subcommands.

pub mod cli;
pub mod grid;
pub mod helmholtz;
pub mod inversion;
pub mod io;
pub mod linalg;
pub mod model;
pub mod phase_retrieval;
pub mod regularization;
pub mod scalar;

pub use scalar::Scalar;

use thiserror::Error;

/// Crate-wide error type. Variants map one-to-one onto the failure classes the
/// operations can report; the CLI prints them on a single prefixed line.
#[derive(Debug, Error)]
pub enum WiprError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("singular operator: {0}")]
    SingularOperator(String),
    #[error("solver accuracy: {0}")]
    SolverAccuracy(String),
    #[error("file format: {0}")]
    FileFormat(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, WiprError>;

/// f64 instantiations used by the CLI and most call sites.
pub type Grid64 = grid::Grid2D<f64>;
pub type GridField64 = grid::GridField<f64>;
pub type ModelField64 = model::ModelField<f64>;
pub type Bounds64 = model::Bounds<f64>;
pub type HelmholtzSystem64 = helmholtz::HelmholtzSystem<f64>;
pub type AcquisitionSet64 = inversion::AcquisitionSet<f64>;
pub type InversionConfig64 = inversion::InversionConfig<f64>;
