#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_nmf::matrix::{DenseMatrix, SparseMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform `(0, 1)` entries kept with probability `density`.
pub fn sparse_uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, density: f64) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| if rng.random::<f64>() < density { rng.random::<f64>() } else { 0.0 })
}

pub fn dense_to_sparse(d: &DenseMatrix) -> SparseMatrix {
    SparseMatrix::from_dense(d).unwrap()
}

/// `A = W* H*` with 30%-dense uniform factors.
pub struct Planted {
    pub a: SparseMatrix,
    pub w: DenseMatrix,
    pub h: DenseMatrix,
}

pub fn planted(m: usize, n: usize, k: usize, seed: u64) -> Planted {
    let mut r = rng(seed);
    let w = sparse_uniform(&mut r, m, k, 0.3);
    let h = sparse_uniform(&mut r, k, n, 0.3);
    let a = dense_to_sparse(&w.matmul(&h).unwrap());
    Planted { a, w, h }
}

/// Random sparse nonnegative matrix with the given density.
pub fn random_sparse(seed: u64, rows: usize, cols: usize, density: f64) -> SparseMatrix {
    dense_to_sparse(&sparse_uniform(&mut rng(seed), rows, cols, density))
}

pub fn random_dense(seed: u64, rows: usize, cols: usize) -> DenseMatrix {
    let mut r = rng(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| r.random::<f64>())
}
