//! Truncated SVD by randomized subspace iteration.
//!
//! A Gaussian test matrix with `k + 10` columns is pushed through at least
//! four rounds of `A Aᵀ` power iteration with re-orthonormalization in
//! between, and further rounds while the leading Ritz values still move. The
//! projected `l×n` problem is diagonalized by one-sided Jacobi, which keeps
//! small singular values accurate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{NmfError, Result};

use super::dense::{dot, DenseMatrix};
use super::sparse::SparseMatrix;

pub const DEFAULT_OVERSAMPLING: usize = 10;
pub const DEFAULT_POWER_ITERATIONS: usize = 4;
/// Cap on the extra rounds run while the Ritz values are still moving.
const MAX_EXTRA_ITERATIONS: usize = 200;
/// Relative change of the leading Ritz values below which iteration stops.
const RITZ_TOL: f64 = 1e-12;

/// Rank-k singular triple `A ≈ U diag(σ) Vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdTriple {
    /// m×k, orthonormal columns.
    pub u: DenseMatrix,
    /// Descending, nonnegative.
    pub singular_values: Vec<f64>,
    /// n×k, orthonormal columns.
    pub v: DenseMatrix,
}

impl SvdTriple {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `‖A − U Σ Vᵀ‖_F` through `‖A‖²_F − Σσ²`, valid because the columns of
    /// `U` and `V` are orthonormal singular directions of `A`.
    pub fn truncation_error(&self, a: &SparseMatrix) -> f64 {
        let captured: f64 = self.singular_values.iter().map(|s| s * s).sum();
        (a.frobenius_sq() - captured).max(0.0).sqrt()
    }

    /// Dense `U Σ Vᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (v, s) in us.row_mut(i).iter_mut().zip(&self.singular_values) {
                *v *= s;
            }
        }
        us.matmul_transpose(&self.v).expect("factor shapes agree")
    }
}

/// Rank-`k` SVD with the default oversampling and power-iteration count.
pub fn truncated_svd(a: &SparseMatrix, k: usize, seed: u64) -> Result<SvdTriple> {
    truncated_svd_with(a, k, seed, DEFAULT_OVERSAMPLING, DEFAULT_POWER_ITERATIONS)
}

/// `power_iterations` is the minimum number of rounds; at most
/// 200 more run while the leading `k` Ritz values keep changing.
pub fn truncated_svd_with(
    a: &SparseMatrix,
    k: usize,
    seed: u64,
    oversampling: usize,
    power_iterations: usize,
) -> Result<SvdTriple> {
    let (m, n) = a.shape();
    let limit = m.min(n);
    if k == 0 || k > limit {
        return Err(NmfError::RankTooLarge { k, limit });
    }
    let l = (k + oversampling).min(limit);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let omega = DenseMatrix::from_fn(n, l, |_, _| rng.sample(StandardNormal));
    let mut q = a.mul_dense(&omega)?;
    orthonormalize_columns(&mut q, &mut rng);
    for _ in 0..power_iterations {
        q = power_round(a, &q, &mut rng)?;
    }

    let mut ritz = Ritz::new(a, &q)?;
    for _ in 0..MAX_EXTRA_ITERATIONS {
        let next_q = power_round(a, &q, &mut rng)?;
        let next = Ritz::new(a, &next_q)?;
        let settled = ritz.leading(k).iter().zip(next.leading(k)).all(|(old, new)| {
            (old - new).abs() <= RITZ_TOL * new.max(f64::MIN_POSITIVE) || new == 0.0 && *old == 0.0
        });
        q = next_q;
        ritz = next;
        if settled {
            break;
        }
    }
    let Ritz { mut cols, rot, mut sigma, order } = ritz;

    let sigma_max = order.first().map_or(0.0, |&i| sigma[i]);
    let floor = f64::EPSILON * (l.max(n) as f64) * sigma_max;

    let mut v_cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut u = DenseMatrix::zeros(m, k);
    let mut values = Vec::with_capacity(k);
    for (out, &idx) in order.iter().take(k).enumerate() {
        let s = sigma[idx];
        let vc = if s > floor {
            cols[idx].iter().map(|x| x / s).collect::<Vec<_>>()
        } else {
            sigma[idx] = 0.0;
            random_orthogonal_to(&v_cols, n, &mut rng)
        };
        v_cols.push(vc);
        values.push(sigma[idx]);
        // U column = Q · (rotation column idx)
        for i in 0..m {
            let qi = q.row(i);
            let mut acc = 0.0;
            for p in 0..l {
                acc += qi[p] * rot[(p, idx)];
            }
            u[(i, out)] = acc;
        }
    }
    cols.clear();
    let v = DenseMatrix::from_columns(n, &v_cols);
    Ok(SvdTriple { u, singular_values: values, v })
}

/// One `A Aᵀ` round with re-orthonormalization after each product.
fn power_round(a: &SparseMatrix, q: &DenseMatrix, rng: &mut ChaCha8Rng) -> Result<DenseMatrix> {
    let mut z = a.transpose_mul_dense(q)?;
    orthonormalize_columns(&mut z, rng);
    let mut q = a.mul_dense(&z)?;
    orthonormalize_columns(&mut q, rng);
    Ok(q)
}

/// Jacobi diagonalization of `Bᵀ = Aᵀ Q` (n×l): rotated columns, the
/// rotation, their norms and the descending order of those norms.
struct Ritz {
    cols: Vec<Vec<f64>>,
    rot: DenseMatrix,
    sigma: Vec<f64>,
    order: Vec<usize>,
}

impl Ritz {
    fn new(a: &SparseMatrix, q: &DenseMatrix) -> Result<Self> {
        let bt = a.transpose_mul_dense(q)?;
        let (cols, rot) = one_sided_jacobi(&bt);
        let sigma: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
        let mut order: Vec<usize> = (0..sigma.len()).collect();
        order.sort_by(|&x, &y| sigma[y].total_cmp(&sigma[x]).then(x.cmp(&y)));
        Ok(Ritz { cols, rot, sigma, order })
    }

    fn leading(&self, k: usize) -> Vec<f64> {
        self.order.iter().take(k).map(|&i| self.sigma[i]).collect()
    }
}

/// Modified Gram-Schmidt applied twice. Columns that collapse numerically
/// are replaced with fresh random directions.
fn orthonormalize_columns(x: &mut DenseMatrix, rng: &mut ChaCha8Rng) {
    let (rows, cols) = x.shape();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut c = x.column(j);
        let original = dot(&c, &c).sqrt();
        for _ in 0..2 {
            for b in &basis {
                let p = dot(&c, b);
                c.iter_mut().zip(b).for_each(|(ci, bi)| *ci -= p * bi);
            }
        }
        let norm = dot(&c, &c).sqrt();
        if norm <= 1e-10 * original.max(f64::MIN_POSITIVE) || norm == 0.0 {
            c = random_orthogonal_to(&basis, rows, rng);
        } else {
            c.iter_mut().for_each(|v| *v /= norm);
        }
        basis.push(c);
    }
    for (j, b) in basis.iter().enumerate() {
        x.set_column(j, b);
    }
}

fn random_orthogonal_to(basis: &[Vec<f64>], len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let mut c: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for b in basis {
                let p = dot(&c, b);
                c.iter_mut().zip(b).for_each(|(ci, bi)| *ci -= p * bi);
            }
        }
        let norm = dot(&c, &c).sqrt();
        if norm > 1e-8 {
            c.iter_mut().for_each(|v| *v /= norm);
            return c;
        }
    }
}

/// Hestenes one-sided Jacobi on the columns of `x` (n×l). Returns the
/// mutually orthogonal columns `X·R` and the accumulated rotation `R` (l×l).
fn one_sided_jacobi(x: &DenseMatrix) -> (Vec<Vec<f64>>, DenseMatrix) {
    let l = x.cols();
    let mut cols: Vec<Vec<f64>> = (0..l).map(|j| x.column(j)).collect();
    let mut rot = DenseMatrix::identity(l);
    let tol = 1e-15;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..l {
            for q in p + 1..l {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                for (xp, xq) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (a, b) = (*xp, *xq);
                    *xp = c * a - s * b;
                    *xq = s * a + c * b;
                }
                for i in 0..l {
                    let (a, b) = (rot[(i, p)], rot[(i, q)]);
                    rot[(i, p)] = c * a - s * b;
                    rot[(i, q)] = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (cols, rot)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix() {
        let a = SparseMatrix::from_triplets(3, 3, &[(0, 0, 3.0), (1, 1, 2.0), (2, 2, 1.0)]).unwrap();
        let svd = truncated_svd(&a, 2, 7).unwrap();
        assert!((svd.singular_values[0] - 3.0).abs() < 1e-12);
        assert!((svd.singular_values[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one() {
        let u = [0.6, 0.8, 0.0];
        let v = [0.0, 1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt(), 0.0];
        let mut t = Vec::new();
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                if ui * vj > 0.0 {
                    t.push((i, j, 5.0 * ui * vj));
                }
            }
        }
        let a = SparseMatrix::from_triplets(3, 4, &t).unwrap();
        let svd = truncated_svd(&a, 1, 1).unwrap();
        assert!((svd.singular_values[0] - 5.0).abs() < 1e-8);
    }

    #[test]
    fn rank_too_large() {
        let a = SparseMatrix::identity(3);
        assert!(matches!(truncated_svd(&a, 4, 0), Err(NmfError::RankTooLarge { k: 4, limit: 3 })));
        assert!(truncated_svd(&a, 0, 0).is_err());
    }

    #[test]
    fn rank_deficient_input_still_orthonormal() {
        let a = SparseMatrix::from_triplets(5, 4, &[(0, 0, 1.0), (1, 0, 1.0), (0, 1, 2.0), (1, 1, 2.0)]).unwrap();
        let svd = truncated_svd(&a, 3, 3).unwrap();
        let vtv = crate::matrix::gram(&svd.v);
        let utu = crate::matrix::gram(&svd.u);
        assert!(vtv.max_abs_diff(&DenseMatrix::identity(3)) < 1e-8);
        assert!(utu.max_abs_diff(&DenseMatrix::identity(3)) < 1e-8);
        assert!((svd.singular_values[0] - 10f64.sqrt()).abs() < 1e-10);
        assert!(svd.singular_values[1] < 1e-10);
    }
}
