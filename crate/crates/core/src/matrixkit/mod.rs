//! Dense complex linear algebra: eigensystems with left/right vectors,
//! numerical rank, Hermitian square roots and intertwiner null spaces.

mod cmatrix;
mod decomp;
mod eigen;
pub mod hqr;
pub mod precise;
pub mod scalar;
pub mod schur;

use thiserror::Error;

pub use cmatrix::CMatrix;
pub use decomp::{
    gram_sqrt, herm_sqrt, hermitian_eigen, intertwiner_nullspace, numerical_rank, numerical_rank_against,
};
pub use eigen::{eig_full, eigenvalues, spectral_order, EigSystem};
pub use precise::{MpComplex, MpMatrix};

/// Relative tolerance used when the caller does not supply one.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("matrix has no entries")]
    Empty,
    #[error("{rows}x{cols} matrix cannot hold {len} entries")]
    Shape { rows: usize, cols: usize, len: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("matrix is not positive definite (smallest eigenvalue {min_eig:.3e}): no physical Dyson map")]
    NotPositiveDefinite { min_eig: f64 },
    #[error("eigenvalue iteration did not converge after {iterations} sweeps")]
    NoConvergence { iterations: usize },
}
