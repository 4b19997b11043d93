//! Small dense kernels shared by every solver: Gram products, the
//! column-simultaneous SPD solve and the trace-form residual.

use crate::error::{NmfError, Result};

use super::dense::DenseMatrix;
use super::sparse::SparseMatrix;

/// Relative pivot threshold for the Cholesky factorization.
const PIVOT_TOL: f64 = 1e-12;
/// Ridge added on a failed factorization, relative to `trace(G)/k`.
const FALLBACK_RIDGE: f64 = 1e-10;

/// `MᵀM`. Only the upper triangle is accumulated and then mirrored, so the
/// result is exactly symmetric.
pub fn gram(m: &DenseMatrix) -> DenseMatrix {
    let k = m.cols();
    let mut g = DenseMatrix::zeros(k, k);
    for i in 0..m.rows() {
        let row = m.row(i);
        for a in 0..k {
            let ra = row[a];
            if ra == 0.0 {
                continue;
            }
            let g_row = g.row_mut(a);
            for b in a..k {
                g_row[b] += ra * row[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            g[(a, b)] = g[(b, a)];
        }
    }
    g
}

/// `M Mᵀ` for a short, wide matrix (k×n), exactly symmetric.
pub fn gram_rows(m: &DenseMatrix) -> DenseMatrix {
    let k = m.rows();
    let mut g = DenseMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let v = super::dense::dot(m.row(a), m.row(b));
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    g
}

/// Lower-triangular Cholesky factor of an SPD matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    /// Factorizes `g`, failing when a pivot drops below `1e-12 · max|g|`.
    pub fn factor(g: &DenseMatrix) -> Result<Self> {
        let k = g.rows();
        if g.cols() != k {
            return Err(NmfError::DimensionMismatch(format!("Gram matrix is {}x{}", k, g.cols())));
        }
        let threshold = PIVOT_TOL * g.max_abs();
        let mut l = DenseMatrix::zeros(k, k);
        for j in 0..k {
            let mut d = g[(j, j)];
            for p in 0..j {
                d -= l[(j, p)] * l[(j, p)];
            }
            if !(d > threshold) {
                return Err(NmfError::SingularSystem(format!(
                    "pivot {d:e} at position {j} is below {threshold:e}"
                )));
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in j + 1..k {
                let mut s = g[(i, j)];
                for p in 0..j {
                    s -= l[(i, p)] * l[(j, p)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Cholesky { l })
    }

    /// Solves `G X = B` for all columns of `B` at once.
    pub fn solve(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        let k = self.l.rows();
        if b.rows() != k {
            return Err(NmfError::DimensionMismatch(format!(
                "right-hand side has {} rows, system has {k}",
                b.rows()
            )));
        }
        let n = b.cols();
        let mut x = b.clone();
        // forward: L Y = B, row by row so each update streams a full row
        for i in 0..k {
            for p in 0..i {
                let lip = self.l[(i, p)];
                if lip == 0.0 {
                    continue;
                }
                let (head, tail) = x.as_mut_slice().split_at_mut(i * n);
                let src = &head[p * n..(p + 1) * n];
                for (t, s) in tail[..n].iter_mut().zip(src) {
                    *t -= lip * s;
                }
            }
            let inv = 1.0 / self.l[(i, i)];
            x.row_mut(i).iter_mut().for_each(|v| *v *= inv);
        }
        // backward: Lᵀ X = Y
        for i in (0..k).rev() {
            for p in i + 1..k {
                let lpi = self.l[(p, i)];
                if lpi == 0.0 {
                    continue;
                }
                let (head, tail) = x.as_mut_slice().split_at_mut(p * n);
                let src = &tail[..n];
                for (t, s) in head[i * n..(i + 1) * n].iter_mut().zip(src) {
                    *t -= lpi * s;
                }
            }
            let inv = 1.0 / self.l[(i, i)];
            x.row_mut(i).iter_mut().for_each(|v| *v *= inv);
        }
        Ok(x)
    }

    pub fn factor_matrix(&self) -> &DenseMatrix {
        &self.l
    }
}

/// Solves `G X = B` with one Cholesky factorization reused across every
/// column of `B`. If the factorization fails, a ridge of
/// `1e-10 · trace(G)/k` is added and the factorization retried once.
pub fn solve_spd_multi(g: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if g.rows() != g.cols() || g.rows() != b.rows() {
        return Err(NmfError::DimensionMismatch(format!(
            "system {}x{} with right-hand side {}x{}",
            g.rows(),
            g.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let chol = match Cholesky::factor(g) {
        Ok(c) => c,
        Err(first) => {
            let k = g.rows().max(1);
            let ridge = FALLBACK_RIDGE * g.trace() / k as f64;
            if !(ridge > 0.0) {
                return Err(first);
            }
            log::debug!("Cholesky failed ({first}); retrying with ridge {ridge:e}");
            let mut shifted = g.clone();
            shifted.add_diagonal(ridge);
            Cholesky::factor(&shifted)?
        }
    };
    chol.solve(b)
}

/// `‖A − WH‖²_F` from solver byproducts:
/// `trace(AᵀA) − 2·⟨H, WᵀA⟩ + ⟨WᵀW, HHᵀ⟩`.
///
/// Negative round-off is clamped to zero.
pub fn residual_trace(
    a: &SparseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
    gram_w: &DenseMatrix,
    wta: &DenseMatrix,
    trace_ata: f64,
) -> Result<f64> {
    let (m, n) = a.shape();
    let k = w.cols();
    if w.rows() != m || h.shape() != (k, n) || gram_w.shape() != (k, k) || wta.shape() != (k, n) {
        return Err(NmfError::DimensionMismatch(format!(
            "A {m}x{n}, W {}x{}, H {}x{}, WᵀW {}x{}, WᵀA {}x{}",
            w.rows(),
            w.cols(),
            h.rows(),
            h.cols(),
            gram_w.rows(),
            gram_w.cols(),
            wta.rows(),
            wta.cols()
        )));
    }
    let cross = h.inner(wta);
    let quad = gram_w.inner(&gram_rows(h));
    let value = trace_ata - 2.0 * cross + quad;
    Ok(value.max(0.0))
}

/// `‖A − WH‖²_F` by materializing each column of `WH`. Reference path for
/// tests and diagnostics.
pub fn residual_explicit(a: &SparseMatrix, w: &DenseMatrix, h: &DenseMatrix) -> Result<f64> {
    let wh = w.matmul(h)?;
    if wh.shape() != a.shape() {
        return Err(NmfError::DimensionMismatch("WH does not match A".into()));
    }
    let mut total = 0.0;
    for j in 0..a.cols() {
        let col = a.column_dense(j);
        for (i, v) in col.iter().enumerate() {
            let d = v - wh[(i, j)];
            total += d * d;
        }
    }
    Ok(total)
}
