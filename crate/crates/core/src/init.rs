//! Strategies for the starting basis `W⁽⁰⁾`.
//!
//! ALS-type solvers only need `W⁽⁰⁾`; `H⁽⁰⁾` follows from one constrained
//! least-squares solve, so nothing here produces `H`.

use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NmfError, Result};
use crate::matrix::{centroid_decomposition, truncated_svd, DenseMatrix, Rows, SparseMatrix};

pub const DEFAULT_P: usize = 20;
pub const DEFAULT_POOL_FRACTION: f64 = 0.2;
/// Largest Σ nnz(column)² accepted when forming `A·Aᵀ`.
pub const COOCCURRENCE_WORK_LIMIT: u128 = 400_000_000;
const COOCCURRENCE_WARN_TERMS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy {
    /// Dense uniform (0, 1) entries.
    Random,
    /// Spherical k-means centroids of the columns of `A`.
    Centroid,
    /// Clusters the rows of the SVD factor `V`; computed when `None`.
    SvdCentroid { v: Option<DenseMatrix> },
    /// Each column averages `p` random columns of `A`.
    RandomAcol { p: usize },
    /// Like `RandomAcol`, sampling from the longest columns of `A`.
    RandomC { p: usize, pool_fraction: f64 },
    /// Centroids of the columns of the term co-occurrence matrix `A·Aᵀ`.
    Cooccurrence,
}

impl InitStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            InitStrategy::Random => "random",
            InitStrategy::Centroid => "centroid",
            InitStrategy::SvdCentroid { .. } => "svd-centroid",
            InitStrategy::RandomAcol { .. } => "acol",
            InitStrategy::RandomC { .. } => "random-c",
            InitStrategy::Cooccurrence => "cooccurrence",
        }
    }

    pub const NAMES: [&'static str; 6] = ["random", "centroid", "svd-centroid", "acol", "random-c", "cooccurrence"];

    /// Parses a strategy name, filling sampling parameters from `p` and
    /// `pool_fraction`.
    pub fn from_name(name: &str, p: usize, pool_fraction: f64) -> Result<Self> {
        Ok(match name {
            "random" => InitStrategy::Random,
            "centroid" => InitStrategy::Centroid,
            "svd-centroid" => InitStrategy::SvdCentroid { v: None },
            "acol" => InitStrategy::RandomAcol { p },
            "random-c" => InitStrategy::RandomC { p, pool_fraction },
            "cooccurrence" => InitStrategy::Cooccurrence,
            other => {
                return Err(NmfError::InvalidConfig(format!(
                    "unknown initialization '{other}' (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }
}

impl fmt::Display for InitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InitStrategy {
    type Err = NmfError;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_name(s, DEFAULT_P, DEFAULT_POOL_FRACTION)
    }
}

/// A strategy together with its seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Initializer {
    pub strategy: InitStrategy,
    pub seed: u64,
}

impl Initializer {
    pub fn new(strategy: InitStrategy, seed: u64) -> Self {
        Initializer { strategy, seed }
    }

    /// Builds `W⁽⁰⁾` (m×k) for `a`.
    pub fn build(&self, a: &SparseMatrix, k: usize) -> Result<DenseMatrix> {
        let seed = self.seed;
        match &self.strategy {
            InitStrategy::Random => Ok(init_random(a.rows(), k, seed)),
            InitStrategy::Centroid => init_centroid(a, k, seed),
            InitStrategy::SvdCentroid { v: Some(v) } => init_svd_centroid(a, v, k, seed),
            InitStrategy::SvdCentroid { v: None } => {
                let svd = truncated_svd(a, k, seed)?;
                init_svd_centroid(a, &svd.v, k, seed)
            }
            InitStrategy::RandomAcol { p } => init_random_acol(a, k, *p, seed),
            InitStrategy::RandomC { p, pool_fraction } => init_random_c(a, k, *p, seed, *pool_fraction),
            InitStrategy::Cooccurrence => init_cooccurrence(a, k, seed),
        }
    }
}

fn check_rank(a: &SparseMatrix, k: usize) -> Result<()> {
    if k == 0 || k > a.rows().min(a.cols()) {
        return Err(NmfError::InvalidRank { k, m: a.rows(), n: a.cols() });
    }
    Ok(())
}

/// Dense m×k matrix of i.i.d. uniform (0, 1) entries.
pub fn init_random(m: usize, k: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(m, k, |_, _| rng.sample(Open01))
}

/// Column mean of the given columns of `a`, summed in ascending column order.
fn average_columns(a: &SparseMatrix, columns: &mut [usize], out: &mut [f64]) {
    columns.sort_unstable();
    out.iter_mut().for_each(|v| *v = 0.0);
    for &j in columns.iter() {
        for (i, v) in a.column(j).iter() {
            out[i] += v;
        }
    }
    let p = columns.len() as f64;
    out.iter_mut().for_each(|v| *v /= p);
}

fn sample_average(a: &SparseMatrix, pool: &[usize], k: usize, p: usize, seed: u64) -> Result<DenseMatrix> {
    if p == 0 || p > pool.len() {
        return Err(NmfError::PTooLarge { p, available: pool.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = DenseMatrix::zeros(a.rows(), k);
    let mut col = vec![0.0; a.rows()];
    for j in 0..k {
        let mut picked: Vec<usize> = index::sample(&mut rng, pool.len(), p).into_iter().map(|i| pool[i]).collect();
        average_columns(a, &mut picked, &mut col);
        w.set_column(j, &col);
    }
    Ok(w)
}

/// Each column of `W⁽⁰⁾` is the mean of `p` columns of `a` drawn without
/// replacement, with a fresh draw per column.
pub fn init_random_acol(a: &SparseMatrix, k: usize, p: usize, seed: u64) -> Result<DenseMatrix> {
    let pool: Vec<usize> = (0..a.cols()).collect();
    sample_average(a, &pool, k, p, seed)
}

/// The `⌈fraction·n⌉` longest columns of `a` by 2-norm, ties to the lower
/// index. Always holds at least one column.
pub fn longest_columns(a: &SparseMatrix, fraction: f64) -> Vec<usize> {
    let n = a.cols();
    let size = ((fraction * n as f64).ceil() as usize).clamp(1, n.max(1));
    let norms = a.column_norms();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]).then(x.cmp(&y)));
    order.truncate(size);
    order
}

/// Random-C: averages `p` columns sampled from the longest columns of `a`.
pub fn init_random_c(a: &SparseMatrix, k: usize, p: usize, seed: u64, pool_fraction: f64) -> Result<DenseMatrix> {
    if !(pool_fraction > 0.0 && pool_fraction <= 1.0) {
        return Err(NmfError::InvalidConfig(format!("pool fraction {pool_fraction} must lie in (0, 1]")));
    }
    let pool = longest_columns(a, pool_fraction);
    sample_average(a, &pool, k, p, seed)
}

/// Centroid initialization from spherical k-means on the columns of `a`.
pub fn init_centroid(a: &SparseMatrix, k: usize, seed: u64) -> Result<DenseMatrix> {
    check_rank(a, k)?;
    Ok(centroid_decomposition(a, k, seed)?.centroids)
}

/// SVD-centroid initialization: clusters the n rows of `v` (n×k), then sets
/// column `c` of `W⁽⁰⁾` to the normalized average of the columns of `a`
/// whose rows of `v` fall in cluster `c`.
pub fn init_svd_centroid(a: &SparseMatrix, v: &DenseMatrix, k: usize, seed: u64) -> Result<DenseMatrix> {
    check_rank(a, k)?;
    if v.rows() != a.cols() || v.cols() != k {
        return Err(NmfError::DimensionMismatch(format!(
            "V is {}x{}, expected {}x{k}",
            v.rows(),
            v.cols(),
            a.cols()
        )));
    }
    let clusters = centroid_decomposition(&Rows(v), k, seed)?;
    let mut w = DenseMatrix::zeros(a.rows(), k);
    let mut col = vec![0.0; a.rows()];
    for c in 0..k {
        let mut members = clusters.members(c);
        average_columns(a, &mut members, &mut col);
        let norm = crate::matrix::norm2(&col);
        if norm > 0.0 {
            col.iter_mut().for_each(|x| *x /= norm);
        }
        w.set_column(c, &col);
    }
    Ok(w)
}

/// Forms `C = A·Aᵀ` and returns the centroids of its columns.
pub fn init_cooccurrence(a: &SparseMatrix, k: usize, seed: u64) -> Result<DenseMatrix> {
    check_rank(a, k)?;
    if a.rows() > COOCCURRENCE_WARN_TERMS {
        log::warn!("co-occurrence initialization on {} terms is very expensive", a.rows());
    }
    let work = a.self_product_cost();
    if work > COOCCURRENCE_WORK_LIMIT {
        return Err(NmfError::ResourceLimit(format!(
            "forming A·Aᵀ needs ~{work} multiply-adds (limit {COOCCURRENCE_WORK_LIMIT})"
        )));
    }
    let c = a.mul_self_transpose();
    Ok(centroid_decomposition(&c, k, seed)?.centroids)
}
