//! Sparse nonnegative matrix factorization by alternating constrained least
//! squares.
//!
//! The crate factors a nonnegative term-by-document matrix `A` (m×n) as
//! `A ≈ WH` with `W` (m×k) and `H` (k×n) entrywise nonnegative. It provides
//! the ACLS and AHCLS solvers, multiplicative-update and GDCLS baselines, six
//! strategies for the starting basis, Frobenius and angular stopping rules,
//! corpus ingestion and an SVD-normalized benchmark harness.

pub mod bench;
pub mod convergence;
pub mod corpus;
pub mod error;
pub mod init;
pub mod matrix;
pub mod solver;

pub use error::{NmfError, Result};
