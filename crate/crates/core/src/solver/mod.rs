//! NMF solvers: ACLS, AHCLS and the MU and GDCLS baselines, driven by a
//! common loop with checkpointed convergence tests.

mod stationarity;
mod steps;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::convergence::{
    angular_measure, angular_measure_matched, should_stop, Checkpoint, ConvergenceCriterion, ConvergenceTrace,
    Decision, Termination,
};
use crate::error::{NmfError, Result};
use crate::init::Initializer;
use crate::matrix::{DenseMatrix, SparseMatrix};

pub use stationarity::{
    gradient_h, gradient_w, projected_residual, stationarity_check, Objective, StationarityReport,
};
pub use steps::{
    acls_step, ahcls_step, cls_update_h, gdcls_step, hoyer_beta, mean_column_sparsity, mu_step, sparsity_hoyer,
    FactorPair, IterState, Penalty, MU_EPSILON,
};

/// Default stationarity tolerance, relative to `‖A‖_F`.
pub const DEFAULT_STATIONARITY_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Acls,
    Ahcls,
    Mu,
    Gdcls,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Acls, Algorithm::Ahcls, Algorithm::Mu, Algorithm::Gdcls];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Acls => "acls",
            Algorithm::Ahcls => "ahcls",
            Algorithm::Mu => "mu",
            Algorithm::Gdcls => "gdcls",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = NmfError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| NmfError::InvalidConfig(format!("unknown algorithm '{s}' (expected acls, ahcls, mu, gdcls)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub k: usize,
    pub lambda_w: f64,
    pub lambda_h: f64,
    /// AHCLS target sparsity of the rows of `W`.
    pub alpha_w: f64,
    /// AHCLS target sparsity of the columns of `H`.
    pub alpha_h: f64,
    pub max_iter: usize,
    pub convergence: ConvergenceCriterion,
    pub seed: u64,
    /// Stationarity tolerance relative to `‖A‖_F`.
    pub stationarity_tol: f64,
    /// Re-match columns greedily before measuring angles.
    pub match_columns: bool,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, k: usize) -> Self {
        SolverConfig {
            algorithm,
            k,
            lambda_w: 0.5,
            lambda_h: 0.5,
            alpha_w: 0.5,
            alpha_h: 0.5,
            max_iter: 100,
            convergence: ConvergenceCriterion::default(),
            seed: 0,
            stationarity_tol: DEFAULT_STATIONARITY_TOL,
            match_columns: false,
        }
    }

    pub fn with_lambdas(mut self, lambda_w: f64, lambda_h: f64) -> Self {
        self.lambda_w = lambda_w;
        self.lambda_h = lambda_h;
        self
    }

    pub fn with_alphas(mut self, alpha_w: f64, alpha_h: f64) -> Self {
        self.alpha_w = alpha_w;
        self.alpha_h = alpha_h;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_convergence(mut self, convergence: ConvergenceCriterion) -> Self {
        self.convergence = convergence;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(NmfError::InvalidConfig(msg));
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        for (name, v) in [("lambda_w", self.lambda_w), ("lambda_h", self.lambda_h)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be a nonnegative real"));
            }
        }
        for (name, v) in [("alpha_w", self.alpha_w), ("alpha_h", self.alpha_h)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} must lie in [0, 1]"));
            }
        }
        if !(self.stationarity_tol > 0.0) {
            return bad("stationarity tolerance must be positive".into());
        }
        self.convergence.validate()
    }

    /// Penalties of the objective this configuration minimizes.
    pub fn objective(&self) -> Objective {
        match self.algorithm {
            Algorithm::Acls => Objective {
                w: Some(Penalty::Ridge(self.lambda_w)),
                h: Some(Penalty::Ridge(self.lambda_h)),
            },
            Algorithm::Ahcls => Objective {
                w: Some(Penalty::Hoyer { lambda: self.lambda_w, beta: hoyer_beta(self.k, self.alpha_w) }),
                h: Some(Penalty::Hoyer { lambda: self.lambda_h, beta: hoyer_beta(self.k, self.alpha_h) }),
            },
            Algorithm::Mu => Objective::PLAIN,
            Algorithm::Gdcls => Objective { w: None, h: Some(Penalty::Ridge(self.lambda_h)) },
        }
    }
}

/// Runs one configured sweep on an existing iterate.
pub fn step(a: &SparseMatrix, state: &mut IterState, config: &SolverConfig) -> Result<()> {
    match config.algorithm {
        Algorithm::Acls => acls_step(a, state, config.lambda_w, config.lambda_h),
        Algorithm::Ahcls => ahcls_step(
            a,
            state,
            config.lambda_w,
            config.lambda_h,
            hoyer_beta(config.k, config.alpha_w),
            hoyer_beta(config.k, config.alpha_h),
        ),
        Algorithm::Mu => mu_step(a, state),
        Algorithm::Gdcls => gdcls_step(a, state, config.lambda_h),
    }
}

/// Builds the starting iterate from `W⁽⁰⁾`: `H⁽⁰⁾` by one ridge least-squares
/// solve and clip. For MU, zero entries of `H⁽⁰⁾` are lifted to
/// [`MU_EPSILON`] so the multiplicative rule can move them.
pub fn start_state(a: &SparseMatrix, w0: DenseMatrix, config: &SolverConfig) -> Result<IterState> {
    let mut state = IterState::new(a, w0, config.seed)?;
    cls_update_h(&mut state, Penalty::Ridge(config.lambda_h))?;
    if config.algorithm == Algorithm::Mu {
        for v in state.h.as_mut_slice() {
            if *v < MU_EPSILON {
                *v = MU_EPSILON;
            }
        }
    }
    Ok(state)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub factors: FactorPair,
    pub trace: ConvergenceTrace,
    pub iterations_run: usize,
    pub termination: Termination,
    pub stationarity: StationarityReport,
    /// Seconds spent building `W⁽⁰⁾`.
    pub init_s: f64,
}

impl SolveResult {
    /// `‖A − WH‖²_F` at the last checkpoint.
    pub fn final_objective_sq(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |c| c.objective_sq)
    }

    /// Same factors (bitwise), iterations, termination and trace values.
    pub fn same_outcome(&self, other: &SolveResult) -> bool {
        self.factors == other.factors
            && self.iterations_run == other.iterations_run
            && self.termination == other.termination
            && self.trace.same_values(&other.trace)
    }
}

/// Factorizes `a` from the given initializer.
pub fn solve(a: &SparseMatrix, config: &SolverConfig, init: &Initializer) -> Result<SolveResult> {
    config.validate()?;
    let (m, n) = a.shape();
    if config.k > m.min(n) {
        return Err(NmfError::InvalidRank { k: config.k, m, n });
    }
    if config.algorithm == Algorithm::Ahcls && (config.lambda_w > 1.0 || config.lambda_h > 1.0) {
        log::warn!("AHCLS with λ above 1 may lose definiteness; 0 ≤ λ ≤ 1 is recommended");
    }
    let init_start = Instant::now();
    let w0 = init.build(a, config.k)?;
    let init_s = init_start.elapsed().as_secs_f64();
    solve_from(a, config, w0, init_s)
}

/// Factorizes `a` from an explicit `W⁽⁰⁾`.
pub fn solve_from(a: &SparseMatrix, config: &SolverConfig, w0: DenseMatrix, init_s: f64) -> Result<SolveResult> {
    config.validate()?;
    let trace_ata = a.frobenius_sq();
    let mut state = start_state(a, w0, config)?;
    let criterion = &config.convergence;
    let want_angles = criterion.rule.needs_angles();

    let started = Instant::now();
    let mut trace = ConvergenceTrace::default();
    let mut termination = Termination::MaxIter;
    let mut iterations_run = 0;

    for t in 1..=config.max_iter {
        let scheduled = criterion.is_checkpoint(t);
        let prev_w = (want_angles && scheduled).then(|| state.w.clone());
        step(a, &mut state, config)?;
        iterations_run = t;

        if !scheduled && t != config.max_iter {
            continue;
        }
        let thetas = match prev_w {
            Some(prev) if config.match_columns => Some(angular_measure_matched(&prev, &state.w)?),
            Some(prev) => Some(angular_measure(&prev, &state.w)?),
            None => None,
        };
        trace.push(Checkpoint {
            iteration: t,
            objective_sq: state.residual_sq(a, trace_ata)?,
            theta_max_deg: thetas.as_ref().map(|th| th.iter().copied().fold(0.0, f64::max)),
            elapsed_s: started.elapsed().as_secs_f64(),
        });
        if let Decision::Stop(reason) = should_stop(criterion, &trace, thetas.as_deref()) {
            termination = reason;
            break;
        }
    }

    let tol = config.stationarity_tol * trace_ata.sqrt();
    let stationarity = stationarity_check(a, &state.w, &state.h, &config.objective(), tol)?;
    Ok(SolveResult { factors: state.into_factors(), trace, iterations_run, termination, stationarity, init_s })
}
