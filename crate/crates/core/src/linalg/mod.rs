//! Sparse and dense linear algebra substrate.

pub mod dense;
pub mod eigen;
pub mod qr;
pub mod sparse;

pub use dense::DenseMatrix;
pub use eigen::{symmetric_eigen, SymmetricEigen};
pub use qr::{lstsq_pivoted, LeastSquares};
pub use sparse::SparseMatrix;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}
