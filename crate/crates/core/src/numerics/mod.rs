//! Sparse/dense kernels shared by the topic extractors.

mod dense;
pub mod io;
mod sparse;
mod svd;
mod tfidf;

pub use dense::{cholesky_solve, dot, norm, row_normalize, DenseMatrix};
pub use sparse::SparseMatrix;
pub use svd::{canonicalize_signs, truncated_svd, truncated_svd_with, SvdOptions, SvdResult};
pub use tfidf::{tfidf, tfidf_with, TfidfVariant};
