//! Projected-gradient (KKT) check at termination.
//!
//! For a nonnegativity-constrained factor `X` with gradient `G`, the point is
//! stationary when `min(X, G) = 0` entrywise.

use serde::{Deserialize, Serialize};

use crate::error::{NmfError, Result};
use crate::matrix::{gram_rows, DenseMatrix, SparseMatrix};

use super::steps::Penalty;

/// Penalties of the objective being checked. `None` means unpenalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub w: Option<Penalty>,
    pub h: Option<Penalty>,
}

impl Objective {
    pub const PLAIN: Objective = Objective { w: None, h: None };

    /// `½‖A − WH‖²_F` plus the penalty terms:
    /// ridge `½λ‖X‖²_F`; Hoyer `½λ Σ (β‖x‖² − (Σx)²)` over the length-k
    /// vectors of the factor (rows of W, columns of H).
    pub fn value(&self, a: &SparseMatrix, w: &DenseMatrix, h: &DenseMatrix) -> Result<f64> {
        let fit = 0.5 * crate::matrix::residual_explicit(a, w, h)?;
        let pw = self.w.map_or(0.0, |p| penalty_value(&p, w, true));
        let ph = self.h.map_or(0.0, |p| penalty_value(&p, h, false));
        Ok(fit + pw + ph)
    }
}

fn penalty_value(p: &Penalty, x: &DenseMatrix, rows: bool) -> f64 {
    match *p {
        Penalty::Ridge(lambda) => 0.5 * lambda * x.frobenius_sq(),
        Penalty::Hoyer { lambda, beta } => {
            let sums = if rows {
                (0..x.rows()).map(|i| x.row(i).iter().sum::<f64>()).collect::<Vec<_>>()
            } else {
                (0..x.cols()).map(|j| (0..x.rows()).map(|i| x[(i, j)]).sum::<f64>()).collect()
            };
            0.5 * lambda * (beta * x.frobenius_sq() - sums.iter().map(|s| s * s).sum::<f64>())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    /// `max |min(W, ∇_W f)|`.
    pub w_residual: f64,
    /// `max |min(H, ∇_H f)|`.
    pub h_residual: f64,
    pub tol: f64,
    pub passed: bool,
}

impl StationarityReport {
    pub fn residual(&self) -> f64 {
        self.w_residual.max(self.h_residual)
    }
}

/// `∇_W f = (WH − A)Hᵀ + penalty gradient` (m×k).
pub fn gradient_w(a: &SparseMatrix, w: &DenseMatrix, h: &DenseMatrix, penalty: Option<Penalty>) -> Result<DenseMatrix> {
    let hht = gram_rows(h);
    let aht = a.mul_dense(&h.transpose())?;
    let mut g = w.matmul(&hht)?.sub(&aht);
    if let Some(p) = penalty {
        add_penalty_gradient(&mut g, w, &p, true);
    }
    Ok(g)
}

/// `∇_H f = Wᵀ(WH − A) + penalty gradient` (k×n).
pub fn gradient_h(a: &SparseMatrix, w: &DenseMatrix, h: &DenseMatrix, penalty: Option<Penalty>) -> Result<DenseMatrix> {
    let wtw = crate::matrix::gram(w);
    let wta = a.transpose_mul_dense(w)?.transpose();
    let mut g = wtw.matmul(h)?.sub(&wta);
    if let Some(p) = penalty {
        add_penalty_gradient(&mut g, h, &p, false);
    }
    Ok(g)
}

fn add_penalty_gradient(g: &mut DenseMatrix, x: &DenseMatrix, p: &Penalty, rows: bool) {
    match *p {
        Penalty::Ridge(lambda) => {
            for (gv, xv) in g.as_mut_slice().iter_mut().zip(x.as_slice()) {
                *gv += lambda * xv;
            }
        }
        Penalty::Hoyer { lambda, beta } => {
            // λ(βx − (Σx)𝟙) per length-k vector
            if rows {
                for i in 0..x.rows() {
                    let s: f64 = x.row(i).iter().sum();
                    for j in 0..x.cols() {
                        g[(i, j)] += lambda * (beta * x[(i, j)] - s);
                    }
                }
            } else {
                for j in 0..x.cols() {
                    let s: f64 = (0..x.rows()).map(|i| x[(i, j)]).sum();
                    for i in 0..x.rows() {
                        g[(i, j)] += lambda * (beta * x[(i, j)] - s);
                    }
                }
            }
        }
    }
}

/// `max |min(x, g)|` over all entries.
pub fn projected_residual(x: &DenseMatrix, g: &DenseMatrix) -> f64 {
    x.as_slice().iter().zip(g.as_slice()).fold(0.0_f64, |acc, (xv, gv)| acc.max(xv.min(*gv).abs()))
}

/// KKT residuals of both factors; passes when both are at most `tol`.
pub fn stationarity_check(
    a: &SparseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
    objective: &Objective,
    tol: f64,
) -> Result<StationarityReport> {
    if w.rows() != a.rows() || h.cols() != a.cols() || w.cols() != h.rows() {
        return Err(NmfError::DimensionMismatch("factors do not match A".into()));
    }
    let w_residual = projected_residual(w, &gradient_w(a, w, h, objective.w)?);
    let h_residual = projected_residual(h, &gradient_h(a, w, h, objective.h)?);
    Ok(StationarityReport { w_residual, h_residual, tol, passed: w_residual <= tol && h_residual <= tol })
}
