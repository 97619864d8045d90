//! Band-limited real fields on the d-torus and their Fourier-multiplier
//! operators.
//!
//! Fields live on `[-π, π]^d` and are stored as complex Fourier coefficients
//! `û_n` with the convention `u(x) = Σ_n û_n e^{i n·x}`; the grid points are
//! `x_j = -π + 2π j / N`. All operators preserve the band limit
//! `|n|_∞ ≤ N/2 − 1` (the Nyquist plane is discarded on entry).

mod container;
mod fft;
mod field;
mod norms;
pub(crate) mod ops;

pub use container::{read_snapshot, snapshot_bytes, write_snapshot, Snapshot, SnapshotHeader};
pub use field::{GridSpec, SpectralField, TensorField, Trajectory};
pub use norms::{holder_time_seminorm, l2_norm_parseval, lp_norm, norm, tensor_lp_norm, Space};
pub use ops::{
    chi, derivative, divergence, divergence_tensor, divergence_tensor_cols, embed_field,
    embed_tensor, fourier_cutoff, fourier_cutoff_tensor,
    fractional_multiplier, gradient, gradient_vector, laplacian, project_leray, CutoffMode,
    FracKind,
};

use thiserror::Error;

/// Errors raised by field construction and multiplier operators.
#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("grid points per axis must be even and ≥ 8, got {0}")]
    BadGrid(usize),
    #[error("dimension must be ≥ 3, got {0}")]
    BadDimension(usize),
    #[error("grid value shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch { expected: Vec<usize>, got: Vec<usize> },
    #[error("component count mismatch: expected {expected}, got {got}")]
    ComponentMismatch { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("nonintegrable zero mode: |n|^s with s < 0 needs a mean-free field")]
    NonintegrableZeroMode,
    #[error("L^p norms require p ≥ 1, got {0}")]
    BadExponent(f64),
    #[error("cut-off frequency must be positive, got {0}")]
    BadCutoff(f64),
    #[error("trajectory needs at least {need} snapshots, got {got}")]
    TooFewSnapshots { need: usize, got: usize },
    #[error("snapshot container is malformed: {0}")]
    BadContainer(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
