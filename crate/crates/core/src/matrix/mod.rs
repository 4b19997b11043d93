//! Matrix types and the linear-algebra kernels used by the solvers.

mod centroid;
mod dense;
mod linalg;
pub mod market;
mod sparse;
mod svd;

pub use centroid::{centroid_decomposition, cosine_dispersion, CentroidDecomposition, ColumnSource, Rows};
pub use dense::DenseMatrix;
pub use linalg::{gram, gram_rows, residual_explicit, residual_trace, solve_spd_multi, Cholesky};
pub use sparse::{SparseColumn, SparseMatrix};
pub use svd::{truncated_svd, truncated_svd_with, SvdTriple};

pub(crate) use dense::{dot, norm2};
