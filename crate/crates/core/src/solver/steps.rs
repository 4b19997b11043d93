//! One sweep of each update rule. Every step leaves the iterate nonnegative
//! and refreshes the cached `WᵀW` and `WᵀA` for the new `W`; the next H-half
//! and the trace-form residual both read them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{NmfError, Result};
use crate::init::DEFAULT_P;
use crate::matrix::{gram, gram_rows, residual_trace, solve_spd_multi, DenseMatrix, SparseMatrix};

/// Additive guard in multiplicative-update denominators.
pub const MU_EPSILON: f64 = 1e-9;

/// Nonnegative factors `W` (m×k) and `H` (k×n).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub w: DenseMatrix,
    pub h: DenseMatrix,
}

impl FactorPair {
    pub fn rank(&self) -> usize {
        self.w.cols()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.w.min_value() >= 0.0 && self.h.min_value() >= 0.0 && self.w.is_finite() && self.h.is_finite()
    }
}

/// The iterate plus the byproducts of its basis.
#[derive(Debug, Clone)]
pub struct IterState {
    pub w: DenseMatrix,
    pub h: DenseMatrix,
    /// `WᵀW` for the current `w`.
    pub gram_w: DenseMatrix,
    /// `WᵀA` (k×n) for the current `w`.
    pub wta: DenseMatrix,
    rng: ChaCha8Rng,
    repairs: usize,
}

impl IterState {
    /// Starts from `w0` with `H = 0`. `seed` drives zero-column repair.
    pub fn new(a: &SparseMatrix, w0: DenseMatrix, seed: u64) -> Result<Self> {
        let (m, n) = a.shape();
        let k = w0.cols();
        if w0.rows() != m || k == 0 {
            return Err(NmfError::DimensionMismatch(format!("W⁽⁰⁾ is {}x{k}, A has {m} rows", w0.rows())));
        }
        if !(w0.min_value() >= 0.0) || !w0.is_finite() {
            return Err(NmfError::InvalidValue("W⁽⁰⁾ must be finite and nonnegative".into()));
        }
        let mut state = IterState {
            gram_w: DenseMatrix::zeros(k, k),
            wta: DenseMatrix::zeros(k, n),
            h: DenseMatrix::zeros(k, n),
            w: w0,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f2e_9a1c),
            repairs: 0,
        };
        state.repair_zero_columns(a);
        state.refresh(a)?;
        Ok(state)
    }

    /// Starts from explicit factors.
    pub fn from_factors(a: &SparseMatrix, w: DenseMatrix, h: DenseMatrix, seed: u64) -> Result<Self> {
        if h.shape() != (w.cols(), a.cols()) {
            return Err(NmfError::DimensionMismatch(format!("H is {}x{}", h.rows(), h.cols())));
        }
        let mut s = Self::new(a, w, seed)?;
        s.h = h;
        Ok(s)
    }

    pub fn rank(&self) -> usize {
        self.w.cols()
    }

    /// Number of zero columns of `W` replaced so far.
    pub fn repairs(&self) -> usize {
        self.repairs
    }

    /// Recomputes `WᵀW` and `WᵀA` from the current `W`.
    pub fn refresh(&mut self, a: &SparseMatrix) -> Result<()> {
        self.gram_w = gram(&self.w);
        self.wta = a.transpose_mul_dense(&self.w)?.transpose();
        Ok(())
    }

    /// `‖A − WH‖²_F` from the cached byproducts.
    pub fn residual_sq(&self, a: &SparseMatrix, trace_ata: f64) -> Result<f64> {
        residual_trace(a, &self.w, &self.h, &self.gram_w, &self.wta, trace_ata)
    }

    pub fn factors(&self) -> FactorPair {
        FactorPair { w: self.w.clone(), h: self.h.clone() }
    }

    pub fn into_factors(self) -> FactorPair {
        FactorPair { w: self.w, h: self.h }
    }

    /// Replaces every all-zero column of `W` with the mean of a fresh random
    /// draw of data columns.
    fn repair_zero_columns(&mut self, a: &SparseMatrix) {
        use rand::seq::index;
        let (m, n) = a.shape();
        let p = DEFAULT_P.min(n);
        for j in 0..self.w.cols() {
            if (0..m).any(|i| self.w[(i, j)] != 0.0) {
                continue;
            }
            // a draw of all-empty documents stays zero; retry a few times
            for _ in 0..8 {
                let mut picked: Vec<usize> = index::sample(&mut self.rng, n, p).into_vec();
                picked.sort_unstable();
                let mut col = vec![0.0; m];
                for &d in &picked {
                    for (i, v) in a.column(d).iter() {
                        col[i] += v;
                    }
                }
                if col.iter().any(|v| *v > 0.0) {
                    col.iter_mut().for_each(|v| *v /= p as f64);
                    self.w.set_column(j, &col);
                    self.repairs += 1;
                    log::debug!("repaired zero column {j} of W");
                    break;
                }
            }
        }
    }
}

/// Penalty shape for one factor in a constrained least-squares half-step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    /// `λ I`.
    Ridge(f64),
    /// `λ β I − λ E`, the Hoyer-sparsity penalty.
    Hoyer { lambda: f64, beta: f64 },
}

impl Penalty {
    fn apply(&self, g: &mut DenseMatrix) {
        match *self {
            Penalty::Ridge(lambda) => g.add_diagonal(lambda),
            Penalty::Hoyer { lambda, beta } => {
                for v in g.as_mut_slice() {
                    *v -= lambda;
                }
                g.add_diagonal(lambda * beta);
            }
        }
    }

    fn is_hoyer(&self) -> bool {
        matches!(self, Penalty::Hoyer { .. })
    }
}

/// `β = ((1 − α)√k + α)²`, the Hoyer penalty scale for target sparsity α.
///
/// Evaluated in expanded form so the endpoints α = 0 and α = 1 give exactly
/// `k` and `1`.
pub fn hoyer_beta(k: usize, alpha: f64) -> f64 {
    let kf = k as f64;
    let c = 1.0 - alpha;
    c * c * kf + 2.0 * alpha * c * kf.sqrt() + alpha * alpha
}

/// Hoyer sparsity `(√n − ‖x‖₁/‖x‖₂)/(√n − 1)`, clamped to `[0, 1]`.
pub fn sparsity_hoyer(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 2 {
        return Err(NmfError::Undefined(n));
    }
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    let l2 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if l2 == 0.0 {
        return Err(NmfError::ZeroVector);
    }
    let rn = (n as f64).sqrt();
    Ok(((rn - l1 / l2) / (rn - 1.0)).clamp(0.0, 1.0))
}

/// Mean Hoyer sparsity over the nonzero columns of `m`; `None` if every
/// column is zero or columns are too short.
pub fn mean_column_sparsity(m: &DenseMatrix) -> Option<f64> {
    let values: Vec<f64> = (0..m.cols()).filter_map(|j| sparsity_hoyer(&m.column(j)).ok()).collect();
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn singular_guidance(err: NmfError, penalty: &Penalty, factor: &str) -> NmfError {
    match err {
        NmfError::SingularSystem(msg) if penalty.is_hoyer() => NmfError::SingularSystem(format!(
            "{factor}-update system lost definiteness ({msg}); lower λ for {factor}"
        )),
        NmfError::SingularSystem(msg) => NmfError::SingularSystem(format!("{factor}-update: {msg}")),
        other => other,
    }
}

/// `H ← max(0, (WᵀW + P)⁻¹ WᵀA)` using the cached byproducts.
pub fn cls_update_h(state: &mut IterState, penalty: Penalty) -> Result<()> {
    let mut g = state.gram_w.clone();
    penalty.apply(&mut g);
    let mut h = solve_spd_multi(&g, &state.wta).map_err(|e| singular_guidance(e, &penalty, "H"))?;
    h.clip_negative();
    state.h = h;
    Ok(())
}

/// `W ← max(0, ((HHᵀ + P)⁻¹ HAᵀ)ᵀ)`; does not refresh byproducts.
fn cls_update_w(a: &SparseMatrix, state: &mut IterState, penalty: Penalty) -> Result<()> {
    let mut g = gram_rows(&state.h);
    penalty.apply(&mut g);
    let aht = a.mul_dense(&state.h.transpose())?;
    let wt = solve_spd_multi(&g, &aht.transpose()).map_err(|e| singular_guidance(e, &penalty, "W"))?;
    let mut w = wt.transpose();
    w.clip_negative();
    state.w = w;
    Ok(())
}

/// `H ← H ⊙ WᵀA ⊘ (WᵀW H + ε)`.
fn mu_update_h(state: &mut IterState) -> Result<()> {
    let denom = state.gram_w.matmul(&state.h)?;
    for ((h, num), d) in state.h.as_mut_slice().iter_mut().zip(state.wta.as_slice()).zip(denom.as_slice()) {
        *h *= num / (d + MU_EPSILON);
    }
    Ok(())
}

/// `W ← W ⊙ AHᵀ ⊘ (W HHᵀ + ε)`.
fn mu_update_w(a: &SparseMatrix, state: &mut IterState) -> Result<()> {
    let hht = gram_rows(&state.h);
    let aht = a.mul_dense(&state.h.transpose())?;
    let denom = state.w.matmul(&hht)?;
    for ((w, num), d) in state.w.as_mut_slice().iter_mut().zip(aht.as_slice()).zip(denom.as_slice()) {
        *w *= num / (d + MU_EPSILON);
    }
    Ok(())
}

fn finish_cls_sweep(a: &SparseMatrix, state: &mut IterState) -> Result<()> {
    state.repair_zero_columns(a);
    state.refresh(a)
}

/// One ACLS sweep: ridge-regularized least squares for `H`, clip, then the
/// same for `W`.
pub fn acls_step(a: &SparseMatrix, state: &mut IterState, lambda_w: f64, lambda_h: f64) -> Result<()> {
    cls_update_h(state, Penalty::Ridge(lambda_h))?;
    cls_update_w(a, state, Penalty::Ridge(lambda_w))?;
    finish_cls_sweep(a, state)
}

/// One AHCLS sweep with `β_W`, `β_H` precomputed by [`hoyer_beta`].
pub fn ahcls_step(
    a: &SparseMatrix,
    state: &mut IterState,
    lambda_w: f64,
    lambda_h: f64,
    beta_w: f64,
    beta_h: f64,
) -> Result<()> {
    cls_update_h(state, Penalty::Hoyer { lambda: lambda_h, beta: beta_h })?;
    cls_update_w(a, state, Penalty::Hoyer { lambda: lambda_w, beta: beta_w })?;
    finish_cls_sweep(a, state)
}

/// One Lee–Seung multiplicative sweep for the squared Frobenius loss. Zero
/// entries stay zero.
pub fn mu_step(a: &SparseMatrix, state: &mut IterState) -> Result<()> {
    mu_update_h(state)?;
    mu_update_w(a, state)?;
    state.refresh(a)
}

/// One GDCLS sweep: a ridge least-squares solve for `H`, then a
/// multiplicative update for `W`.
pub fn gdcls_step(a: &SparseMatrix, state: &mut IterState, lambda_h: f64) -> Result<()> {
    cls_update_h(state, Penalty::Ridge(lambda_h))?;
    mu_update_w(a, state)?;
    finish_cls_sweep(a, state)
}
