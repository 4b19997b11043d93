//! Benchmark harness: SVD-normalized error curves, initializer comparison
//! and multi-restart search.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NmfError, Result};
use crate::init::{InitStrategy, Initializer};
use crate::matrix::{truncated_svd, DenseMatrix, SparseMatrix};
use crate::solver::{solve, start_state, step, Algorithm, SolveResult, SolverConfig};

/// Seed of the randomized SVD that provides the error baseline.
pub const BASELINE_SEED: u64 = 0x5356_4442;
/// Relative errors below this are clamped.
const ERROR_FLOOR: f64 = -1e-9;
/// Bytes per stored nonzero of a sparse `W⁽⁰⁾` (index plus value).
const SPARSE_ENTRY_BYTES: usize = std::mem::size_of::<usize>() + std::mem::size_of::<f64>();

/// `(‖A − WH‖_F − svd_err) / svd_err`, clamped below at `-1e-9`.
pub fn relative_error(a: &SparseMatrix, w: &DenseMatrix, h: &DenseMatrix, svd_err: f64) -> Result<f64> {
    if !(svd_err > 0.0) {
        return Err(NmfError::NonpositiveBaseline(svd_err));
    }
    let residual = crate::matrix::residual_explicit(a, w, h)?.sqrt();
    Ok(relative_from_residual(residual, svd_err))
}

fn relative_from_residual(residual: f64, svd_err: f64) -> f64 {
    ((residual - svd_err) / svd_err).max(ERROR_FLOOR)
}

/// `‖A − U_k Σ_k V_kᵀ‖_F` for the rank-`k` truncated SVD.
pub fn svd_baseline(a: &SparseMatrix, k: usize) -> Result<f64> {
    let svd = truncated_svd(a, k, BASELINE_SEED)?;
    Ok(svd.truncation_error(a))
}

/// Storage of `W⁽⁰⁾`: sparse layout when under half full, dense otherwise.
pub fn storage_bytes(w0: &DenseMatrix) -> usize {
    if w0.density() < 0.5 {
        w0.nnz() * SPARSE_ENTRY_BYTES
    } else {
        w0.rows() * w0.cols() * std::mem::size_of::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub algorithm: Algorithm,
    pub init: String,
    pub seed: u64,
    pub iterations: usize,
    /// Relative error at the last checkpoint.
    pub error_rel: f64,
    pub wall_s: f64,
    pub w0_storage_bytes: usize,
    pub w0_build_s: f64,
    /// `Error(t)` at each checkpoint of the report, in order.
    pub errors: Vec<f64>,
}

impl BenchRecord {
    fn key(&self) -> (&'static str, &str, u64) {
        (self.algorithm.name(), self.init.as_str(), self.seed)
    }
}

/// Mean and spread of one (algorithm, init) group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub algorithm: Algorithm,
    pub init: String,
    pub runs: usize,
    pub mean_errors: Vec<f64>,
    pub min_error_rel: f64,
    pub max_error_rel: f64,
    pub mean_wall_s: f64,
    pub mean_w0_build_s: f64,
    pub mean_w0_storage_bytes: f64,
}

/// A run that stopped on a numerical failure, such as an AHCLS system that
/// lost definiteness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchFailure {
    pub algorithm: Algorithm,
    pub init: String,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BenchReport {
    pub svd_err: f64,
    pub checkpoints: Vec<usize>,
    pub records: Vec<BenchRecord>,
    pub failures: Vec<BenchFailure>,
}

impl BenchReport {
    /// Records in key order: algorithm, init, seed.
    pub fn sort(&mut self) {
        self.records.sort_by(|a, b| a.key().cmp(&b.key()));
    }

    pub fn records_for<'a>(&'a self, algorithm: Algorithm, init: &'a str) -> impl Iterator<Item = &'a BenchRecord> + 'a {
        self.records.iter().filter(move |r| r.algorithm == algorithm && r.init == init)
    }

    /// Mean `Error(t)` of a group at checkpoint `t`.
    pub fn mean_error(&self, algorithm: Algorithm, init: &str, t: usize) -> Option<f64> {
        let idx = self.checkpoints.iter().position(|&c| c == t)?;
        let values: Vec<f64> = self.records_for(algorithm, init).map(|r| r.errors[idx]).collect();
        (!values.is_empty()).then(|| mean(&values))
    }

    pub fn summaries(&self) -> Vec<GroupSummary> {
        let mut groups: BTreeMap<(&str, &str), Vec<&BenchRecord>> = BTreeMap::new();
        for r in &self.records {
            groups.entry((r.algorithm.name(), r.init.as_str())).or_default().push(r);
        }
        groups
            .into_values()
            .map(|rs| {
                let col = |f: &dyn Fn(&BenchRecord) -> f64| mean(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
                GroupSummary {
                    algorithm: rs[0].algorithm,
                    init: rs[0].init.clone(),
                    runs: rs.len(),
                    mean_errors: (0..self.checkpoints.len()).map(|i| col(&|r| r.errors[i])).collect(),
                    min_error_rel: rs.iter().map(|r| r.error_rel).fold(f64::INFINITY, f64::min),
                    max_error_rel: rs.iter().map(|r| r.error_rel).fold(f64::NEG_INFINITY, f64::max),
                    mean_wall_s: col(&|r| r.wall_s),
                    mean_w0_build_s: col(&|r| r.w0_build_s),
                    mean_w0_storage_bytes: col(&|r| r.w0_storage_bytes as f64),
                }
            })
            .collect()
    }

    /// CSV with one `error_<t>` column per checkpoint. The baseline is kept
    /// in a leading `# svd_err=` comment line, failed runs in `# failed=`
    /// lines after it.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# svd_err={}\n", self.svd_err);
        for f in &self.failures {
            out.push_str(&format!("# failed={},{},{},{}\n", f.algorithm, f.init, f.seed, f.message.replace('\n', " ")));
        }
        out.push_str("algorithm,init,seed,iterations,error_rel,wall_s,w0_storage_bytes,w0_build_s");
        for t in &self.checkpoints {
            out.push_str(&format!(",error_{t}"));
        }
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}",
                r.algorithm, r.init, r.seed, r.iterations, r.error_rel, r.wall_s, r.w0_storage_bytes, r.w0_build_s
            ));
            for e in &r.errors {
                out.push_str(&format!(",{e}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let perr = |line: usize, msg: &str| NmfError::Parse { line: line + 1, msg: msg.to_string() };

        let (idx, first) = lines.next().ok_or_else(|| perr(0, "empty report"))?;
        let svd_err = first
            .strip_prefix("# svd_err=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| perr(idx, "missing svd_err line"))?;

        let mut failures = Vec::new();
        let (idx, header) = loop {
            let (idx, line) = lines.next().ok_or_else(|| perr(idx + 1, "missing header"))?;
            let Some(rest) = line.strip_prefix("# failed=") else { break (idx, line) };
            let f: Vec<&str> = rest.splitn(4, ',').collect();
            if f.len() != 4 {
                return Err(perr(idx, "malformed failure line"));
            }
            failures.push(BenchFailure {
                algorithm: f[0].parse().map_err(|_| perr(idx, "algorithm"))?,
                init: f[1].to_string(),
                seed: f[2].parse().map_err(|_| perr(idx, "seed"))?,
                message: f[3].to_string(),
            });
        };
        let names: Vec<&str> = header.split(',').collect();
        if names.len() < 8 || names[..8].join(",") != "algorithm,init,seed,iterations,error_rel,wall_s,w0_storage_bytes,w0_build_s" {
            return Err(perr(idx, "unexpected header"));
        }
        let checkpoints = names[8..]
            .iter()
            .map(|n| n.strip_prefix("error_").and_then(|t| t.parse().ok()).ok_or_else(|| perr(idx, n)))
            .collect::<Result<Vec<usize>>>()?;

        let mut records = Vec::new();
        for (idx, line) in lines {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 + checkpoints.len() {
                return Err(perr(idx, "wrong number of fields"));
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(|_| perr(idx, names[i]));
            records.push(BenchRecord {
                algorithm: f[0].parse().map_err(|_| perr(idx, "algorithm"))?,
                init: f[1].to_string(),
                seed: f[2].parse().map_err(|_| perr(idx, "seed"))?,
                iterations: f[3].parse().map_err(|_| perr(idx, "iterations"))?,
                error_rel: num(4)?,
                wall_s: num(5)?,
                w0_storage_bytes: f[6].parse().map_err(|_| perr(idx, "w0_storage_bytes"))?,
                w0_build_s: num(7)?,
                errors: (8..f.len()).map(num).collect::<Result<_>>()?,
            });
        }
        Ok(BenchReport { svd_err, checkpoints, records, failures })
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// A grid of runs: every algorithm × strategy × seed.
#[derive(Debug, Clone)]
pub struct BenchPlan {
    /// Template for rank, penalties and convergence; algorithm, seed and
    /// iteration count are set per run.
    pub config: SolverConfig,
    pub algorithms: Vec<Algorithm>,
    pub strategies: Vec<InitStrategy>,
    pub seeds: Vec<u64>,
    pub checkpoints: Vec<usize>,
}

/// Runs every cell of the plan in parallel. Each run iterates to the last
/// checkpoint and reports `Error(t)` at each one; checkpoint 0 is the start
/// iterate `(W⁽⁰⁾, H⁽⁰⁾)`. Runs that fail numerically are listed in
/// `failures`; any other error aborts the benchmark.
pub fn run_benchmark(a: &SparseMatrix, plan: &BenchPlan) -> Result<BenchReport> {
    if plan.checkpoints.is_empty() || plan.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(NmfError::InvalidConfig("checkpoints must be non-empty and strictly increasing".into()));
    }
    if plan.algorithms.is_empty() || plan.strategies.is_empty() || plan.seeds.is_empty() {
        return Err(NmfError::InvalidConfig("benchmark needs at least one algorithm, strategy and seed".into()));
    }
    let k = plan.config.k;
    let (m, n) = a.shape();
    if k == 0 || k > m.min(n) {
        return Err(NmfError::InvalidRank { k, m, n });
    }
    let svd_err = svd_baseline(a, k)?;
    if !(svd_err > 0.0) {
        return Err(NmfError::NonpositiveBaseline(svd_err));
    }

    let mut cells = Vec::new();
    for &algorithm in &plan.algorithms {
        for strategy in &plan.strategies {
            for &seed in &plan.seeds {
                cells.push((algorithm, strategy, seed));
            }
        }
    }
    let outcomes: Vec<_> = cells
        .into_par_iter()
        .map(|(algorithm, strategy, seed)| {
            let mut config = plan.config.clone();
            config.algorithm = algorithm;
            config.seed = seed;
            (algorithm, strategy, seed, run_cell(a, &config, strategy, &plan.checkpoints, svd_err))
        })
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (algorithm, strategy, seed, outcome) in outcomes {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) if e.is_numerical() => {
                log::warn!("{algorithm}/{strategy}/seed {seed} failed: {e}");
                failures.push(BenchFailure { algorithm, init: strategy.name().to_string(), seed, message: e.to_string() });
            }
            Err(e) => return Err(e),
        }
    }
    let mut report = BenchReport { svd_err, checkpoints: plan.checkpoints.clone(), records, failures };
    report.sort();
    Ok(report)
}

fn run_cell(
    a: &SparseMatrix,
    config: &SolverConfig,
    strategy: &InitStrategy,
    checkpoints: &[usize],
    svd_err: f64,
) -> Result<BenchRecord> {
    let trace_ata = a.frobenius_sq();
    let build_start = Instant::now();
    let w0 = Initializer::new(strategy.clone(), config.seed).build(a, config.k)?;
    let w0_build_s = build_start.elapsed().as_secs_f64();
    let w0_storage_bytes = storage_bytes(&w0);

    let started = Instant::now();
    let mut state = start_state(a, w0, config)?;
    let mut errors = Vec::with_capacity(checkpoints.len());
    let mut t = 0;
    for &target in checkpoints {
        while t < target {
            step(a, &mut state, config)?;
            t += 1;
        }
        errors.push(relative_from_residual(state.residual_sq(a, trace_ata)?.sqrt(), svd_err));
    }
    Ok(BenchRecord {
        algorithm: config.algorithm,
        init: strategy.name().to_string(),
        seed: config.seed,
        iterations: t,
        error_rel: *errors.last().expect("checkpoints are non-empty"),
        wall_s: started.elapsed().as_secs_f64(),
        w0_storage_bytes,
        w0_build_s,
        errors,
    })
}

/// Initializer comparison under one algorithm: one row per (strategy, seed).
pub fn compare_inits(
    a: &SparseMatrix,
    config: &SolverConfig,
    strategies: &[InitStrategy],
    seeds: &[u64],
    checkpoints: &[usize],
) -> Result<BenchReport> {
    run_benchmark(
        a,
        &BenchPlan {
            config: config.clone(),
            algorithms: vec![config.algorithm],
            strategies: strategies.to_vec(),
            seeds: seeds.to_vec(),
            checkpoints: checkpoints.to_vec(),
        },
    )
}

#[derive(Debug, Clone)]
pub struct MultiRestart {
    pub best: SolveResult,
    pub best_index: usize,
    pub seeds: Vec<u64>,
    /// Terminal `‖A − WH‖²_F` of every restart, in seed order.
    pub objectives: Vec<f64>,
}

/// Seeds for `n` restarts: the master seed first, then draws from a
/// generator seeded with it.
pub fn restart_seeds(master: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    let mut seeds = Vec::with_capacity(n);
    if n > 0 {
        seeds.push(master);
    }
    while seeds.len() < n {
        seeds.push(rng.next_u64());
    }
    seeds
}

/// Solves from `n_restarts` independent starts and keeps the lowest terminal
/// objective. Ties go to the earliest restart. Restart 0 uses `config.seed`,
/// so a single restart equals a plain [`solve`].
pub fn multi_restart(
    a: &SparseMatrix,
    config: &SolverConfig,
    strategy: &InitStrategy,
    n_restarts: usize,
) -> Result<MultiRestart> {
    if n_restarts == 0 {
        return Err(NmfError::InvalidConfig("at least one restart is required".into()));
    }
    let seeds = restart_seeds(config.seed, n_restarts);
    let results = seeds
        .par_iter()
        .map(|&seed| {
            let mut cfg = config.clone();
            cfg.seed = seed;
            solve(a, &cfg, &Initializer::new(strategy.clone(), seed))
        })
        .collect::<Result<Vec<_>>>()?;
    let objectives: Vec<f64> = results.iter().map(SolveResult::final_objective_sq).collect();
    let best_index = objectives
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v < objectives[best] { i } else { best });
    let best = results.into_iter().nth(best_index).expect("index in range");
    Ok(MultiRestart { best, best_index, seeds, objectives })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> SparseMatrix {
        let mut t = Vec::new();
        for j in 0..20 {
            for i in 0..15 {
                if (i * 7 + j * 3) % 4 != 0 {
                    t.push((i, j, 1.0 + ((i + 2 * j) % 6) as f64));
                }
            }
        }
        SparseMatrix::from_triplets(15, 20, &t).unwrap()
    }

    #[test]
    fn relative_error_scale() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 3.0), (1, 1, 4.0)]).unwrap();
        let w = DenseMatrix::zeros(2, 1);
        let h = DenseMatrix::zeros(1, 2);
        assert_eq!(relative_error(&a, &w, &h, 5.0).unwrap(), 0.0);
        assert_eq!(relative_error(&a, &w, &h, 2.5).unwrap(), 1.0);
        assert_eq!(relative_error(&a, &w, &h, 10.0).unwrap(), -1e-9);
        assert!(matches!(relative_error(&a, &w, &h, 0.0), Err(NmfError::NonpositiveBaseline(_))));
    }

    #[test]
    fn storage_sparse_and_dense() {
        let mut w = DenseMatrix::zeros(10, 2);
        w.set_column(0, &[1.0; 10]);
        // exactly half full counts as dense
        assert_eq!(storage_bytes(&w), 160);
        let mut w = DenseMatrix::zeros(10, 2);
        w.set_column(0, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(storage_bytes(&w), 2 * SPARSE_ENTRY_BYTES);
    }

    #[test]
    fn zero_checkpoint_only() {
        let cfg = SolverConfig::new(Algorithm::Acls, 3);
        let r = compare_inits(&data(), &cfg, &[InitStrategy::Random], &[1, 2], &[0]).unwrap();
        assert_eq!(r.records.len(), 2);
        assert!(r.records.iter().all(|rec| rec.iterations == 0 && rec.errors.len() == 1));
    }

    #[test]
    fn rows_sorted_and_deterministic() {
        let cfg = SolverConfig::new(Algorithm::Acls, 3);
        let strategies = [InitStrategy::RandomAcol { p: 3 }, InitStrategy::Random];
        let a = compare_inits(&data(), &cfg, &strategies, &[5, 1], &[0, 10]).unwrap();
        let b = compare_inits(&data(), &cfg, &strategies, &[5, 1], &[0, 10]).unwrap();
        let keys: Vec<_> = a.records.iter().map(|r| (r.init.clone(), r.seed)).collect();
        assert_eq!(
            keys,
            vec![("acol".into(), 1), ("acol".into(), 5), ("random".into(), 1), ("random".into(), 5)]
        );
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.errors, y.errors);
        }
    }

    #[test]
    fn bad_checkpoints_rejected() {
        let cfg = SolverConfig::new(Algorithm::Acls, 3);
        assert!(compare_inits(&data(), &cfg, &[InitStrategy::Random], &[1], &[10, 0]).is_err());
        assert!(compare_inits(&data(), &cfg, &[InitStrategy::Random], &[1], &[]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let cfg = SolverConfig::new(Algorithm::Gdcls, 2);
        let report = compare_inits(&data(), &cfg, &[InitStrategy::Random], &[3], &[0, 5]).unwrap();
        let back = BenchReport::from_csv(&report.to_csv()).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn single_restart_equals_solve() {
        let cfg = SolverConfig::new(Algorithm::Acls, 3).with_max_iter(15).with_seed(9);
        let multi = multi_restart(&data(), &cfg, &InitStrategy::Random, 1).unwrap();
        let plain = solve(&data(), &cfg, &Initializer::new(InitStrategy::Random, 9)).unwrap();
        assert!(multi.best.same_outcome(&plain));
    }

    #[test]
    fn best_is_minimum() {
        let cfg = SolverConfig::new(Algorithm::Acls, 3).with_max_iter(10);
        let multi = multi_restart(&data(), &cfg, &InitStrategy::Random, 5).unwrap();
        let min = multi.objectives.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(multi.best.final_objective_sq(), min);
        assert_eq!(multi.seeds.len(), 5);
    }
}
