//! Dense and sparse linear algebra used by every model.
//!
//! Products accumulate in ascending index order so results are reproducible
//! bit-for-bit. Factorizations go through [`cholesky_with_jitter`], which
//! escalates a diagonal jitter by factors of ten until the factorization
//! succeeds or the cap is reached.

mod cholesky;
mod dense;
mod sparse;

pub use cholesky::{
    cholesky, cholesky_with_jitter, default_jitter_range, logdet_from_factor, solve_psd,
    CholeskyFactor, SYMMETRY_TOL,
};
pub use dense::{dot, DenseMatrix};
pub use sparse::{sparse_dense_product, SparseRowMatrix};
