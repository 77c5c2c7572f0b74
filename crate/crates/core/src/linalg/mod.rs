//! Sparse storage, a sparse direct solver and dense eigenvalue helpers.

pub mod dense;
pub mod lu;
pub mod sparse;

pub use lu::{relative_residual, PivotReport, SparseLu};
pub use sparse::{block_matrix, CscMatrix, Triplets};
