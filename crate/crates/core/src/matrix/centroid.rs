//! Centroid decomposition by spherical k-means over the columns of a matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NmfError, Result};

use super::dense::{norm2, DenseMatrix};
use super::sparse::SparseMatrix;

pub const MAX_ITERATIONS: usize = 100;
pub const MOVEMENT_TOL: f64 = 1e-6;

/// A collection of column vectors that can be clustered.
pub trait ColumnSource {
    /// Length of each column.
    fn dim(&self) -> usize;
    /// Number of columns.
    fn count(&self) -> usize;
    fn column_norm(&self, j: usize) -> f64;
    fn column_dot(&self, j: usize, dense: &[f64]) -> f64;
    /// `acc += scale * column(j)`.
    fn add_column(&self, j: usize, scale: f64, acc: &mut [f64]);
}

impl ColumnSource for SparseMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn count(&self) -> usize {
        self.cols()
    }

    fn column_norm(&self, j: usize) -> f64 {
        self.column(j).norm_sq().sqrt()
    }

    fn column_dot(&self, j: usize, dense: &[f64]) -> f64 {
        self.column(j).dot_dense(dense)
    }

    fn add_column(&self, j: usize, scale: f64, acc: &mut [f64]) {
        for (i, v) in self.column(j).iter() {
            acc[i] += scale * v;
        }
    }
}

impl ColumnSource for DenseMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn count(&self) -> usize {
        self.cols()
    }

    fn column_norm(&self, j: usize) -> f64 {
        (0..self.rows()).map(|i| self[(i, j)] * self[(i, j)]).sum::<f64>().sqrt()
    }

    fn column_dot(&self, j: usize, dense: &[f64]) -> f64 {
        (0..self.rows()).map(|i| self[(i, j)] * dense[i]).sum()
    }

    fn add_column(&self, j: usize, scale: f64, acc: &mut [f64]) {
        for (i, a) in acc.iter_mut().enumerate() {
            *a += scale * self[(i, j)];
        }
    }
}

/// The rows of a dense matrix, viewed as the vectors to cluster.
#[derive(Debug, Clone, Copy)]
pub struct Rows<'a>(pub &'a DenseMatrix);

impl ColumnSource for Rows<'_> {
    fn dim(&self) -> usize {
        self.0.cols()
    }

    fn count(&self) -> usize {
        self.0.rows()
    }

    fn column_norm(&self, j: usize) -> f64 {
        norm2(self.0.row(j))
    }

    fn column_dot(&self, j: usize, dense: &[f64]) -> f64 {
        self.0.row(j).iter().zip(dense).map(|(x, y)| x * y).sum()
    }

    fn add_column(&self, j: usize, scale: f64, acc: &mut [f64]) {
        for (a, x) in acc.iter_mut().zip(self.0.row(j)) {
            *a += scale * x;
        }
    }
}

/// Result of clustering the columns of a matrix.
#[derive(Debug, Clone)]
pub struct CentroidDecomposition {
    /// dims×k, unit-norm columns.
    pub centroids: DenseMatrix,
    /// Cluster of each input column; `None` for zero columns.
    pub assignments: Vec<Option<usize>>,
    /// Σ cos(column, assigned centroid).
    pub objective: f64,
    pub iterations: usize,
}

impl CentroidDecomposition {
    /// Members of cluster `c`, in column order.
    pub fn members(&self, c: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter_map(|(j, a)| (*a == Some(c)).then_some(j))
            .collect()
    }
}

/// Clusters the columns of `m` into `k` groups by cosine similarity and
/// returns the normalized cluster means.
///
/// Zero columns are left out of the clustering. Fails with
/// `DegenerateInput` when fewer than `k` nonzero columns remain.
pub fn centroid_decomposition<M: ColumnSource + ?Sized>(
    m: &M,
    k: usize,
    seed: u64,
) -> Result<CentroidDecomposition> {
    let n = m.count();
    let dim = m.dim();
    if k == 0 || k > n {
        return Err(NmfError::InvalidRank { k, m: dim, n });
    }
    let norms: Vec<f64> = (0..n).map(|j| m.column_norm(j)).collect();
    let valid: Vec<usize> = (0..n).filter(|&j| norms[j] > 0.0).collect();
    if valid.len() < k {
        return Err(NmfError::DegenerateInput(format!(
            "{} nonzero columns cannot form {k} clusters",
            valid.len()
        )));
    }
    if valid.len() < n {
        log::debug!("excluding {} zero columns from clustering", n - valid.len());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(m, &norms, &valid, k, &mut rng);
    let mut assignments: Vec<Option<usize>> = vec![None; n];
    let mut cosines = vec![0.0; n];
    let mut iterations = 0;

    for it in 0..MAX_ITERATIONS {
        iterations = it + 1;
        assign(m, &norms, &valid, &centroids, &mut assignments, &mut cosines);
        fill_empty_clusters(&valid, &mut assignments, &mut cosines, k);
        let next = cluster_means(m, &norms, &valid, &assignments, k, dim);
        // a mean can only vanish when opposite directions cancel; keep the old centroid
        let next: Vec<Vec<f64>> =
            next.into_iter().zip(&centroids).map(|(c, old)| c.unwrap_or_else(|| old.clone())).collect();
        let movement = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
            .fold(0.0_f64, f64::max);
        centroids = next;
        if movement <= MOVEMENT_TOL {
            break;
        }
    }
    assign(m, &norms, &valid, &centroids, &mut assignments, &mut cosines);
    fill_empty_clusters(&valid, &mut assignments, &mut cosines, k);
    let objective = valid.iter().map(|&j| cosines[j]).sum();

    Ok(CentroidDecomposition {
        centroids: DenseMatrix::from_columns(dim, &centroids),
        assignments,
        objective,
        iterations,
    })
}

/// Spherical k-means++ seeding: each further centroid is drawn with
/// probability proportional to `1 − max cosine` to the centroids so far.
fn seed_centroids<M: ColumnSource + ?Sized>(
    m: &M,
    norms: &[f64],
    valid: &[usize],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    let dim = m.dim();
    let unit = |j: usize| {
        let mut v = vec![0.0; dim];
        m.add_column(j, 1.0 / norms[j], &mut v);
        v
    };
    let mut chosen = vec![valid[rng.random_range(0..valid.len())]];
    let mut centroids = vec![unit(chosen[0])];
    let mut best_cos: Vec<f64> = valid.iter().map(|&j| m.column_dot(j, &centroids[0]) / norms[j]).collect();
    while centroids.len() < k {
        let weights: Vec<f64> = best_cos.iter().map(|c| (1.0 - c).max(0.0)).collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (p, w) in weights.iter().enumerate() {
                if *w > 0.0 {
                    pick = Some(p);
                    if target < *w {
                        break;
                    }
                    target -= w;
                }
            }
            pick.expect("positive total weight")
        } else {
            // every column duplicates a chosen one; take the first unused
            (0..valid.len()).find(|p| !chosen.contains(&valid[*p])).expect("k <= nonzero columns")
        };
        let j = valid[pick];
        chosen.push(j);
        let c = unit(j);
        for (p, &v) in valid.iter().enumerate() {
            let cos = m.column_dot(v, &c) / norms[v];
            if cos > best_cos[p] {
                best_cos[p] = cos;
            }
        }
        centroids.push(c);
    }
    centroids
}

/// Moves the worst-fitting column of a cluster that can spare one into each
/// empty cluster.
fn fill_empty_clusters(valid: &[usize], assignments: &mut [Option<usize>], cosines: &mut [f64], k: usize) {
    loop {
        let sizes = cluster_sizes(assignments, k);
        let Some(empty) = sizes.iter().position(|s| *s == 0) else { break };
        let donor = valid
            .iter()
            .copied()
            .filter(|&j| assignments[j].is_some_and(|c| sizes[c] > 1))
            .min_by(|&a, &b| cosines[a].total_cmp(&cosines[b]).then(a.cmp(&b)))
            .expect("k <= nonzero columns guarantees a donor");
        assignments[donor] = Some(empty);
        cosines[donor] = 1.0;
    }
}

fn assign<M: ColumnSource + ?Sized>(
    m: &M,
    norms: &[f64],
    valid: &[usize],
    centroids: &[Vec<f64>],
    assignments: &mut [Option<usize>],
    cosines: &mut [f64],
) {
    for &j in valid {
        let mut best = (0, f64::NEG_INFINITY);
        for (c, centroid) in centroids.iter().enumerate() {
            let cos = m.column_dot(j, centroid) / norms[j];
            if cos > best.1 {
                best = (c, cos);
            }
        }
        assignments[j] = Some(best.0);
        cosines[j] = best.1;
    }
}

fn cluster_means<M: ColumnSource + ?Sized>(
    m: &M,
    norms: &[f64],
    valid: &[usize],
    assignments: &[Option<usize>],
    k: usize,
    dim: usize,
) -> Vec<Option<Vec<f64>>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for &j in valid {
        let c = assignments[j].expect("valid columns are assigned");
        m.add_column(j, 1.0 / norms[j], &mut sums[c]);
        counts[c] += 1;
    }
    sums.into_iter()
        .zip(counts)
        .map(|(mut s, count)| {
            if count == 0 {
                return None;
            }
            let norm = norm2(&s);
            if norm == 0.0 {
                return None;
            }
            s.iter_mut().for_each(|v| *v /= norm);
            Some(s)
        })
        .collect()
}

fn cluster_sizes(assignments: &[Option<usize>], k: usize) -> Vec<usize> {
    let mut sizes = vec![0; k];
    for c in assignments.iter().flatten() {
        sizes[*c] += 1;
    }
    sizes
}

/// Σ over clusters of `1 − cos(column, cluster mean direction)`; lower is
/// tighter. Used to compare partitions.
pub fn cosine_dispersion<M: ColumnSource + ?Sized>(m: &M, assignments: &[Option<usize>], k: usize) -> f64 {
    let dim = m.dim();
    let norms: Vec<f64> = (0..m.count()).map(|j| m.column_norm(j)).collect();
    let valid: Vec<usize> = (0..m.count()).filter(|&j| norms[j] > 0.0).collect();
    let means = cluster_means(m, &norms, &valid, assignments, k, dim);
    valid
        .iter()
        .map(|&j| {
            let c = assignments[j].expect("assigned");
            match &means[c] {
                Some(mean) => 1.0 - m.column_dot(j, mean) / norms[j],
                None => 1.0,
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_clusters() {
        let m = DenseMatrix::from_columns(
            3,
            &[vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 3.0, 0.0]],
        );
        let cd = centroid_decomposition(&m, 2, 5).unwrap();
        let mut cols: Vec<Vec<f64>> = (0..2).map(|c| cd.centroids.column(c)).collect();
        cols.sort_by(|a, b| b[0].total_cmp(&a[0]));
        assert_eq!(cols, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        assert_eq!(cd.assignments[0], cd.assignments[1]);
        assert_ne!(cd.assignments[0], cd.assignments[2]);
    }

    #[test]
    fn singleton_clusters() {
        let m = DenseMatrix::from_columns(2, &[vec![3.0, 4.0], vec![1.0, 0.0], vec![0.0, 2.0]]);
        let cd = centroid_decomposition(&m, 3, 11).unwrap();
        for j in 0..3 {
            let c = cd.assignments[j].unwrap();
            let col = m.column(j);
            let norm = norm2(&col);
            for (got, v) in cd.centroids.column(c).iter().zip(&col) {
                assert!((got - v / norm).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_columns_are_excluded() {
        let m = DenseMatrix::from_columns(2, &[vec![1.0, 0.0], vec![0.0, 0.0], vec![0.0, 1.0]]);
        let cd = centroid_decomposition(&m, 2, 0).unwrap();
        assert_eq!(cd.assignments[1], None);
        let m = DenseMatrix::from_columns(2, &[vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert!(matches!(centroid_decomposition(&m, 2, 0), Err(NmfError::DegenerateInput(_))));
    }

    #[test]
    fn duplicate_columns_fill_every_cluster() {
        let m = DenseMatrix::from_columns(2, &[vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]]);
        let cd = centroid_decomposition(&m, 2, 4).unwrap();
        let sizes = cluster_sizes(&cd.assignments, 2);
        assert!(sizes.iter().all(|s| *s > 0));
    }

    #[test]
    fn deterministic_per_seed() {
        let m = DenseMatrix::from_fn(5, 12, |i, j| ((i * 7 + j * 3) % 5) as f64);
        let a = centroid_decomposition(&m, 3, 9).unwrap();
        let b = centroid_decomposition(&m, 3, 9).unwrap();
        assert_eq!(a.centroids, b.centroids);
        assert_eq!(a.assignments, b.assignments);
    }
}
