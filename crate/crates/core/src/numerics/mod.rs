//! Dense linear-algebra kernels: SVD, truncated pseudo-inverse, eigenvalues,
//! SPD solves, and the small matrix type they operate on.
//!
//! Everything here is pure and carries no domain knowledge; all tolerances
//! and iteration caps are exposed as module constants.

mod eig;
mod matrix;
mod svd;

pub use eig::{eigenvalues, ComplexSpectrum, EIG_MAX_DIM, EIG_MAX_SHIFTS_PER_DIM};
pub use matrix::{skew, solve_spd, Cholesky, Matrix, SPD_SYMMETRY_TOL};
pub use svd::{
    pinv, pinv_with_rank, svd, SvdResult, SVD_MAX_SWEEPS_PER_DIM, SVD_ORTHONORMALITY_TOL,
    SVD_RECONSTRUCTION_TOL,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("matrix dimensions {rows}x{cols} do not match {len} entries")]
    ShapeMismatch { rows: usize, cols: usize, len: usize },
    #[error("matrix entry {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("matrix dimensions must be positive, got {rows}x{cols}")]
    EmptyDimension { rows: usize, cols: usize },
    #[error("SVD did not converge within {sweeps} Jacobi sweeps")]
    SvdNonConvergence { sweeps: usize },
    #[error("eigenvalue QR iteration exceeded {shifts} shifts")]
    EigNonConvergence { shifts: usize },
    #[error("all singular values fell below the truncation threshold (rank zero)")]
    RankZero,
    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:.3e})")]
    NotSymmetric { max_asymmetry: f64 },
    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    #[error("eigenvalue solve limited to dimension {max}, got {got}")]
    DimensionTooLarge { got: usize, max: usize },
}
