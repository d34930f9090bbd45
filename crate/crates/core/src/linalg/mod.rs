//! Dense and sparse linear-algebra primitives shared by every sampler.

pub mod mat;
pub mod sparse;
pub mod sparse_chol;

pub use mat::{dense_cholesky, dot, log_det_from_factor, triangular_solve, Cholesky, DenseSpd, Mat, Side};
pub use sparse::{SparsePrecision, SparseUpperFactor};
pub use sparse_chol::{sparse_spd_factorize, FillOrdering, SparseCholesky};
