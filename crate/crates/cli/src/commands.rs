use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sparse_nmf::bench::{compare_inits, multi_restart, run_benchmark, BenchPlan, BenchReport};
use sparse_nmf::convergence::{ConvergenceCriterion, StopRule};
use sparse_nmf::corpus::{build_matrix, document_paths, mini_corpus_matrix, TokenizerConfig, Vocabulary, Weighting};
use sparse_nmf::init::{InitStrategy, Initializer};
use sparse_nmf::matrix::market::{read_dense_file, read_sparse_file, write_dense_file, write_sparse_file};
use sparse_nmf::matrix::SparseMatrix;
use sparse_nmf::solver::{mean_column_sparsity, solve, Algorithm, SolveResult, SolverConfig};
use sparse_nmf::NmfError;

use crate::datasets::{fetch, Dataset};
use crate::error::{CliError, CliResult};
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::topics::{format_table, permute_columns, reorder_permutation, topic_terms};

fn parse<T: FromStr<Err = NmfError>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: NmfError| e.to_string())
}

fn init_name(s: &str) -> Result<String, String> {
    if InitStrategy::NAMES.contains(&s) {
        Ok(s.to_string())
    } else {
        Err(format!("expected one of {}", InitStrategy::NAMES.join(", ")))
    }
}

#[derive(Debug, Parser)]
#[command(name = "snmf", version, about = "Sparse nonnegative matrix factorization of term-document matrices")]
pub struct Cli {
    /// Where to write the run manifest instead of beside the outputs.
    #[arg(long, global = true, value_name = "FILE")]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a weighted term-by-document matrix from a directory of text files.
    BuildMatrix(BuildMatrixArgs),
    /// Factorize a matrix and write W, H and the convergence trace.
    Factorize(FactorizeArgs),
    /// Print the top terms of each basis vector.
    Topics(TopicsArgs),
    /// Run every (algorithm, initializer, seed) combination and report errors.
    Benchmark(BenchmarkArgs),
    /// Compare initializers under one algorithm.
    CompareInits(CompareInitsArgs),
    /// Download a public collection and convert it to matrix.mtx and vocab.tsv.
    FetchDatasets(FetchArgs),
    /// Repeat the run recorded in a manifest.
    Rerun(RerunArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::BuildMatrix(_) => "build-matrix",
            Command::Factorize(_) => "factorize",
            Command::Topics(_) => "topics",
            Command::Benchmark(_) => "benchmark",
            Command::CompareInits(_) => "compare-inits",
            Command::FetchDatasets(_) => "fetch-datasets",
            Command::Rerun(_) => "rerun",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BuildMatrixArgs {
    /// Directory with one document per file.
    #[arg(long, required_unless_present = "mini_corpus")]
    pub input: Option<PathBuf>,
    /// Use the bundled 60-document corpus instead of --input.
    #[arg(long, conflicts_with = "input")]
    pub mini_corpus: bool,
    #[arg(long, default_value = "tfidf", value_parser = parse::<Weighting>)]
    pub weighting: Weighting,
    /// Drop terms that occur in fewer documents.
    #[arg(long, default_value_t = 2)]
    pub min_df: usize,
    /// Whitespace-separated stopword list replacing the built-in one.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub min_token_len: usize,
    #[arg(long, default_value = "matrix.mtx")]
    pub out: PathBuf,
    #[arg(long, default_value = "vocab.tsv")]
    pub vocab: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PenaltyArgs {
    #[arg(long, default_value_t = 0.5)]
    pub lambda_w: f64,
    #[arg(long, default_value_t = 0.5)]
    pub lambda_h: f64,
    /// AHCLS target sparsity of W.
    #[arg(long, default_value_t = 0.5)]
    pub alpha_w: f64,
    /// AHCLS target sparsity of H.
    #[arg(long, default_value_t = 0.5)]
    pub alpha_h: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InitArgs {
    #[arg(long, default_value = "random", value_parser = init_name)]
    pub init: String,
    /// Columns averaged per basis vector by acol and random-c.
    #[arg(long, default_value_t = sparse_nmf::init::DEFAULT_P)]
    pub init_p: usize,
    /// Share of the longest columns random-c samples from.
    #[arg(long, default_value_t = sparse_nmf::init::DEFAULT_POOL_FRACTION)]
    pub init_pool_fraction: f64,
    /// Initializer seed; defaults to --seed.
    #[arg(long)]
    pub init_seed: Option<u64>,
    /// Precomputed right singular vectors (n x k, array format) for svd-centroid.
    #[arg(long)]
    pub svd_v: Option<PathBuf>,
}

impl InitArgs {
    fn strategy(&self) -> CliResult<InitStrategy> {
        let mut strategy = InitStrategy::from_name(&self.init, self.init_p, self.init_pool_fraction)?;
        if let Some(path) = &self.svd_v {
            match &mut strategy {
                InitStrategy::SvdCentroid { v } => *v = Some(read_dense_file(path)?),
                _ => return Err(CliError::Usage("--svd-v only applies to --init svd-centroid".into())),
            }
        }
        Ok(strategy)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FactorizeArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, default_value = "acls", value_parser = parse::<Algorithm>)]
    pub algorithm: Algorithm,
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// maxiter, frob:EPS or angular:EPS.
    #[arg(long, default_value = "maxiter", value_parser = parse::<StopRule>)]
    pub conv: StopRule,
    #[arg(long, default_value_t = sparse_nmf::convergence::DEFAULT_CHECK_INTERVAL)]
    pub check_interval: usize,
    #[arg(long, default_value_t = sparse_nmf::convergence::DEFAULT_BURN_IN)]
    pub burn_in: usize,
    /// Re-match basis columns before measuring angles.
    #[arg(long)]
    pub match_columns: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub init: InitArgs,
    /// Independent starts; the lowest final objective is kept.
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

impl FactorizeArgs {
    pub fn config(&self) -> SolverConfig {
        let mut c = SolverConfig::new(self.algorithm, self.k)
            .with_lambdas(self.penalty.lambda_w, self.penalty.lambda_h)
            .with_alphas(self.penalty.alpha_w, self.penalty.alpha_h)
            .with_max_iter(self.max_iter)
            .with_seed(self.seed)
            .with_convergence(ConvergenceCriterion {
                rule: self.conv,
                check_interval: self.check_interval,
                burn_in: self.burn_in,
            });
        c.match_columns = self.match_columns;
        c
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TopicsArgs {
    /// Basis matrix written by factorize.
    #[arg(long)]
    pub w: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Terms per basis vector.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Reorder columns to best match this basis.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Show term weights.
    #[arg(long)]
    pub weights: bool,
    /// Also write the table to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value = "acls,ahcls,mu,gdcls", value_delimiter = ',', value_parser = parse::<Algorithm>)]
    pub algorithms: Vec<Algorithm>,
    #[arg(long, default_value = "random,acol,centroid,svd-centroid", value_delimiter = ',', value_parser = init_name)]
    pub inits: Vec<String>,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[arg(long, default_value = "report.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    /// Number of seeds per combination.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Iterations at which Error(t) is recorded.
    #[arg(long, default_value = "0,10,20,30", value_delimiter = ',')]
    pub checkpoints: Vec<usize>,
    #[arg(long, default_value_t = sparse_nmf::init::DEFAULT_P)]
    pub init_p: usize,
    #[arg(long, default_value_t = sparse_nmf::init::DEFAULT_POOL_FRACTION)]
    pub init_pool_fraction: f64,
}

impl SweepArgs {
    fn seed_list(&self) -> Vec<u64> {
        (self.seed..self.seed + self.seeds).collect()
    }

    fn strategies(&self, names: &[String]) -> CliResult<Vec<InitStrategy>> {
        names
            .iter()
            .map(|n| InitStrategy::from_name(n, self.init_p, self.init_pool_fraction).map_err(CliError::from))
            .collect()
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareInitsArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value = "acls", value_parser = parse::<Algorithm>)]
    pub algorithm: Algorithm,
    #[arg(
        long,
        default_value = "random,centroid,svd-centroid,acol,random-c,cooccurrence",
        value_delimiter = ',',
        value_parser = init_name
    )]
    pub inits: Vec<String>,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[arg(long, default_value = "report.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FetchArgs {
    #[arg(value_enum)]
    pub dataset: Dataset,
    /// Downloaded archives are kept here and reused.
    #[arg(long, default_value = "data/cache")]
    pub cache_dir: PathBuf,
    /// Output directory; defaults to data/<dataset>.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Alternative URL or local archive path.
    #[arg(long)]
    pub source: Option<String>,
    /// Expected archive digest.
    #[arg(long)]
    pub sha256: Option<String>,
    #[arg(long, default_value = "tfidf", value_parser = parse::<Weighting>)]
    pub weighting: Weighting,
    #[arg(long, default_value_t = 2)]
    pub min_df: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RerunArgs {
    /// Manifest written by an earlier run.
    pub manifest_file: PathBuf,
    /// Fail unless every deterministic output is byte-identical.
    #[arg(long)]
    pub verify: bool,
}

fn beside(path: &Path, name: &str) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.join(name),
        _ => PathBuf::from(name),
    }
}

fn create_parent(path: &Path) -> CliResult<()> {
    if let Some(p) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(p)?;
    }
    Ok(())
}

fn load_matrix(path: &Path) -> CliResult<SparseMatrix> {
    read_sparse_file(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn to_value<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).expect("arguments serialize")
}

/// Parses `argv` (program name first) and runs the command.
pub fn run(argv: &[String], out: &mut dyn Write) -> CliResult<RunManifest> {
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(e.to_string()))?;
    execute(cli, argv, out)
}

/// Runs a parsed command and writes its manifest.
pub fn execute(cli: Cli, argv: &[String], out: &mut dyn Write) -> CliResult<RunManifest> {
    let name = cli.command.name();
    let (manifest, default_path) = match &cli.command {
        Command::BuildMatrix(a) => build_matrix_cmd(a, name, argv, out)?,
        Command::Factorize(a) => factorize_cmd(a, name, argv, out)?,
        Command::Topics(a) => topics_cmd(a, name, argv, out)?,
        Command::Benchmark(a) => benchmark_cmd(a, name, argv, out)?,
        Command::CompareInits(a) => compare_inits_cmd(a, name, argv, out)?,
        Command::FetchDatasets(a) => fetch_cmd(a, name, argv, out)?,
        Command::Rerun(a) => return rerun_cmd(a, out),
    };
    let path = cli.manifest.unwrap_or(default_path);
    create_parent(&path)?;
    manifest.write(&path)?;
    Ok(manifest)
}

fn build_matrix_cmd(
    a: &BuildMatrixArgs,
    name: &str,
    argv: &[String],
    out: &mut dyn Write,
) -> CliResult<(RunManifest, PathBuf)> {
    let mut manifest = RunManifest::new(name, argv, None, to_value(a));
    let mut tokenizer = TokenizerConfig { min_token_len: a.min_token_len, ..TokenizerConfig::default() }.with_min_df(a.min_df);
    if let Some(path) = &a.stopwords {
        tokenizer = tokenizer.with_stopword_text(&fs::read_to_string(path)?);
        manifest.input(path)?;
    }
    let corpus = if a.mini_corpus {
        mini_corpus_matrix(a.weighting)?
    } else {
        let dir = a.input.as_ref().expect("clap requires --input without --mini-corpus");
        let paths = document_paths(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
        if paths.is_empty() {
            return Err(CliError::Data(format!("{} contains no documents", dir.display())));
        }
        for p in &paths {
            manifest.input(p)?;
        }
        build_matrix(&paths, &tokenizer, a.weighting)?
    };
    create_parent(&a.out)?;
    create_parent(&a.vocab)?;
    write_sparse_file(&a.out, &corpus.matrix)?;
    corpus.vocabulary.write_tsv_file(&a.vocab)?;
    manifest.output(&a.out, true)?;
    manifest.output(&a.vocab, true)?;
    let (m, n) = corpus.matrix.shape();
    writeln!(out, "{m} terms x {n} documents, {} nonzeros ({} weighting)", corpus.matrix.nnz(), a.weighting)?;
    if !corpus.empty_documents.is_empty() {
        writeln!(out, "{} documents kept no terms", corpus.empty_documents.len())?;
    }
    Ok((manifest, beside(&a.out, MANIFEST_FILE)))
}

fn factorize_cmd(
    a: &FactorizeArgs,
    name: &str,
    argv: &[String],
    out: &mut dyn Write,
) -> CliResult<(RunManifest, PathBuf)> {
    let config = a.config();
    let mut manifest = RunManifest::new(name, argv, Some(a.seed), to_value(a));
    let matrix = load_matrix(&a.matrix)?;
    manifest.input(&a.matrix)?;
    if let Some(v) = &a.init.svd_v {
        manifest.input(v)?;
    }
    let strategy = a.init.strategy()?;
    let result: SolveResult = if a.restarts > 1 {
        let best = multi_restart(&matrix, &config, &strategy, a.restarts)?;
        writeln!(out, "best of {} restarts: restart {} (seed {})", a.restarts, best.best_index, best.seeds[best.best_index])?;
        best.best
    } else {
        let init_seed = a.init.init_seed.unwrap_or(a.seed);
        solve(&matrix, &config, &Initializer::new(strategy, init_seed))?
    };

    fs::create_dir_all(&a.out_dir)?;
    let w_path = a.out_dir.join("W.mtx");
    let h_path = a.out_dir.join("H.mtx");
    let trace_path = a.out_dir.join("trace.csv");
    write_dense_file(&w_path, &result.factors.w)?;
    write_dense_file(&h_path, &result.factors.h)?;
    fs::write(&trace_path, result.trace.to_csv())?;
    manifest.output(&w_path, true)?;
    manifest.output(&h_path, true)?;
    manifest.output(&trace_path, false)?;

    let residual = result.final_objective_sq().sqrt();
    let norm = matrix.frobenius_sq().sqrt();
    let st = &result.stationarity;
    writeln!(out, "{} k={} init={} seed={}", config.algorithm, config.k, a.init.init, a.seed)?;
    writeln!(out, "iterations: {} (stopped by {})", result.iterations_run, result.termination)?;
    writeln!(out, "||A - WH||_F = {residual:.6} (relative {:.6})", residual / norm)?;
    writeln!(
        out,
        "stationarity: W {:.3e}, H {:.3e}, tol {:.3e} ({})",
        st.w_residual,
        st.h_residual,
        st.tol,
        if st.passed { "passed" } else { "not reached" }
    )?;
    let spar = |m: Option<f64>| m.map_or("n/a".to_string(), |s| format!("{s:.3}"));
    writeln!(
        out,
        "sparsity: W rows {}, H columns {}",
        spar(mean_column_sparsity(&result.factors.w.transpose())),
        spar(mean_column_sparsity(&result.factors.h))
    )?;
    writeln!(out, "wrote {}, {}, {}", w_path.display(), h_path.display(), trace_path.display())?;
    Ok((manifest, a.out_dir.join(MANIFEST_FILE)))
}

fn topics_cmd(a: &TopicsArgs, name: &str, argv: &[String], out: &mut dyn Write) -> CliResult<(RunManifest, PathBuf)> {
    let mut manifest = RunManifest::new(name, argv, None, to_value(a));
    let w = read_dense_file(&a.w).map_err(|e| CliError::Data(format!("{}: {e}", a.w.display())))?;
    let vocab = Vocabulary::read_tsv_file(&a.vocab).map_err(|e| CliError::Data(format!("{}: {e}", a.vocab.display())))?;
    manifest.input(&a.w)?;
    manifest.input(&a.vocab)?;
    let (w, labels) = match &a.reference {
        Some(r) => {
            let reference = read_dense_file(r)?;
            manifest.input(r)?;
            let perm = reorder_permutation(&w, &reference)?;
            (permute_columns(&w, &perm), perm)
        }
        None => {
            let k = w.cols();
            (w, (0..k).collect())
        }
    };
    let table = format_table(&topic_terms(&w, &vocab, a.top)?, &labels, a.weights);
    out.write_all(table.as_bytes())?;
    if let Some(path) = &a.out {
        create_parent(path)?;
        fs::write(path, &table)?;
        manifest.output(path, true)?;
    }
    let anchor = a.out.as_ref().unwrap_or(&a.w);
    Ok((manifest, beside(anchor, "topics-manifest.json")))
}

fn write_report(report: &BenchReport, path: &Path, out: &mut dyn Write) -> CliResult<()> {
    create_parent(path)?;
    fs::write(path, report.to_csv())?;
    writeln!(out, "svd baseline ||A - A_k||_F = {:.6}", report.svd_err)?;
    let header: Vec<String> = report.checkpoints.iter().map(|t| format!("Error({t})")).collect();
    writeln!(out, "{:<8} {:<14} {}  {:>9}  {:>12}", "alg", "init", header.join("  "), "wall_s", "W0 bytes")?;
    for s in report.summaries() {
        let errs: Vec<String> = s
            .mean_errors
            .iter()
            .zip(&header)
            .map(|(e, h)| format!("{:>w$}", format!("{:.4}%", 100.0 * e), w = h.len()))
            .collect();
        writeln!(
            out,
            "{:<8} {:<14} {}  {:>9.4}  {:>12.0}",
            s.algorithm.name(),
            s.init,
            errs.join("  "),
            s.mean_wall_s,
            s.mean_w0_storage_bytes
        )?;
    }
    for f in &report.failures {
        writeln!(out, "failed: {} {} seed {}: {}", f.algorithm.name(), f.init, f.seed, f.message)?;
    }
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

fn bench_config(algorithm: Algorithm, k: usize, p: &PenaltyArgs) -> SolverConfig {
    SolverConfig::new(algorithm, k)
        .with_lambdas(p.lambda_w, p.lambda_h)
        .with_alphas(p.alpha_w, p.alpha_h)
}

fn benchmark_cmd(
    a: &BenchmarkArgs,
    name: &str,
    argv: &[String],
    out: &mut dyn Write,
) -> CliResult<(RunManifest, PathBuf)> {
    let mut manifest = RunManifest::new(name, argv, Some(a.sweep.seed), to_value(a));
    let matrix = load_matrix(&a.matrix)?;
    manifest.input(&a.matrix)?;
    let plan = BenchPlan {
        config: bench_config(Algorithm::Acls, a.k, &a.penalty),
        algorithms: a.algorithms.clone(),
        strategies: a.sweep.strategies(&a.inits)?,
        seeds: a.sweep.seed_list(),
        checkpoints: a.sweep.checkpoints.clone(),
    };
    let report = run_benchmark(&matrix, &plan)?;
    write_report(&report, &a.out, out)?;
    manifest.output(&a.out, false)?;
    Ok((manifest, beside(&a.out, MANIFEST_FILE)))
}

fn compare_inits_cmd(
    a: &CompareInitsArgs,
    name: &str,
    argv: &[String],
    out: &mut dyn Write,
) -> CliResult<(RunManifest, PathBuf)> {
    let mut manifest = RunManifest::new(name, argv, Some(a.sweep.seed), to_value(a));
    let matrix = load_matrix(&a.matrix)?;
    manifest.input(&a.matrix)?;
    let report = compare_inits(
        &matrix,
        &bench_config(a.algorithm, a.k, &a.penalty),
        &a.sweep.strategies(&a.inits)?,
        &a.sweep.seed_list(),
        &a.sweep.checkpoints,
    )?;
    write_report(&report, &a.out, out)?;
    manifest.output(&a.out, false)?;
    Ok((manifest, beside(&a.out, MANIFEST_FILE)))
}

fn fetch_cmd(a: &FetchArgs, name: &str, argv: &[String], out: &mut dyn Write) -> CliResult<(RunManifest, PathBuf)> {
    let mut manifest = RunManifest::new(name, argv, None, to_value(a));
    let out_dir = a.out_dir.clone().unwrap_or_else(|| Path::new("data").join(a.dataset.name()));
    let tokenizer = TokenizerConfig::default().with_min_df(a.min_df);
    let report =
        fetch(a.dataset, &a.cache_dir, &out_dir, a.source.as_deref(), a.sha256.as_deref(), &tokenizer, a.weighting)?;
    manifest.input(&report.archive)?;
    for file in ["matrix.mtx", "vocab.tsv", "docs.tsv"] {
        manifest.output(&out_dir.join(file), true)?;
    }
    writeln!(
        out,
        "{}: {} ({}), sha256 {}",
        a.dataset.name(),
        report.archive.display(),
        if report.cache_hit { "cache hit" } else { "downloaded" },
        report.sha256
    )?;
    writeln!(out, "{} terms x {} documents, {} nonzeros in {}", report.terms, report.documents, report.nnz, out_dir.display())?;
    Ok((manifest, out_dir.join(MANIFEST_FILE)))
}

fn rerun_cmd(a: &RerunArgs, out: &mut dyn Write) -> CliResult<RunManifest> {
    let recorded = RunManifest::read(&a.manifest_file)?;
    for input in &recorded.inputs {
        let now = crate::manifest::sha256_file(&input.path)?;
        if now != input.sha256 {
            return Err(CliError::Data(format!("input {} changed since the recorded run", input.path.display())));
        }
    }
    let cli = Cli::try_parse_from(&recorded.argv).map_err(|e| CliError::Data(format!("recorded command line: {e}")))?;
    if matches!(cli.command, Command::Rerun(_)) {
        return Err(CliError::Usage("a manifest cannot record a rerun".into()));
    }
    let fresh = execute(cli, &recorded.argv, out)?;
    if a.verify {
        for old in recorded.outputs.iter().filter(|o| o.deterministic) {
            let new = fresh.outputs.iter().find(|o| o.path == old.path);
            if new.map(|n| &n.sha256) != Some(&old.sha256) {
                return Err(CliError::Data(format!("{} differs from the recorded run", old.path.display())));
            }
        }
        writeln!(out, "verified: deterministic outputs are byte-identical")?;
    }
    Ok(fresh)
}
