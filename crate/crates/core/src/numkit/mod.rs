//! Dense linear algebra, special functions and seeded sampling shared by the
//! rest of the crate.

mod linalg;
mod matrix;
mod rng;
mod sampling;
mod scalar;
mod special;
pub mod stats;

pub use linalg::{cholesky, symmetric_eigen, EIGEN_CLIP, PSD_TOL, SYMMETRY_TOL};
pub use matrix::Matrix;
pub use rng::{fnv1a, RngStream, StreamRng};
pub use sampling::{empirical_covariance, sample_mvn};
pub use scalar::{naive_gemm, Scalar};
pub use special::{log_sum_exp, logistic_loss, softplus, stable_sigmoid};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumError {
    #[error("matrix is not symmetric (max |m_ij - m_ji| = {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },
    #[error("matrix is not positive semi-definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
}
