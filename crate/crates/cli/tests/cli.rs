use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output};

use flate2::write::GzEncoder;
use flate2::Compression;
use snmf_cli::manifest::RunManifest;
use snmf_cli::topics::{permute_columns, reorder_permutation};
use sparse_nmf::corpus::Vocabulary;
use sparse_nmf::matrix::market::{read_dense_file, write_dense_file};
use sparse_nmf::matrix::DenseMatrix;

fn snmf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snmf")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = snmf(dir, args);
    assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn mini_matrix(dir: &Path) {
    ok(dir, &["build-matrix", "--mini-corpus", "--out", "m/matrix.mtx", "--vocab", "m/vocab.tsv"]);
}

#[test]
fn build_factorize_topics_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    mini_matrix(d);
    assert!(d.join("m/manifest.json").is_file());
    let text = ok(
        d,
        &["factorize", "--matrix", "m/matrix.mtx", "--k", "8", "--init", "acol", "--init-p", "5", "--max-iter", "20", "--out-dir", "run"],
    );
    assert!(text.contains("iterations: 20"), "{text}");
    let w = read_dense_file(d.join("run/W.mtx")).unwrap();
    let h = read_dense_file(d.join("run/H.mtx")).unwrap();
    assert_eq!(w.shape(), (Vocabulary::read_tsv_file(d.join("m/vocab.tsv")).unwrap().len(), 8));
    assert_eq!(h.shape(), (8, 60));
    assert!(fs::read_to_string(d.join("run/trace.csv")).unwrap().lines().count() > 1);

    let table = ok(d, &["topics", "--w", "run/W.mtx", "--vocab", "m/vocab.tsv", "--top", "5"]);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[0].split_whitespace().count(), 8);

    let manifest = RunManifest::read(&d.join("run/manifest.json")).unwrap();
    assert_eq!(manifest.command, "factorize");
    assert_eq!(manifest.seed, Some(0));
    assert_eq!(manifest.config["k"], 8);
    assert_eq!(manifest.config["penalty"]["lambda_h"], 0.5);
    assert_eq!(manifest.outputs.len(), 3);

    let again = ok(d, &["rerun", "run/manifest.json", "--verify"]);
    assert!(again.contains("verified"), "{again}");
}

#[test]
fn rerun_rejects_changed_input() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    mini_matrix(d);
    ok(d, &["factorize", "--matrix", "m/matrix.mtx", "--k", "3", "--max-iter", "5", "--out-dir", "run"]);
    let mut text = fs::read_to_string(d.join("m/matrix.mtx")).unwrap();
    text.push_str("% edited\n");
    fs::write(d.join("m/matrix.mtx"), text).unwrap();
    let o = snmf(d, &["rerun", "run/manifest.json"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn topics_of_a_unit_basis() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let terms: Vec<String> = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta"].iter().map(|s| s.to_string()).collect();
    Vocabulary::new(terms, vec![1; 6]).unwrap().write_tsv_file(d.join("vocab.tsv")).unwrap();
    let w = DenseMatrix::from_fn(6, 1, |i, _| if i == 3 { 1.0 } else { 0.0 });
    write_dense_file(d.join("W.mtx"), &w).unwrap();
    let table = ok(d, &["topics", "--w", "W.mtx", "--vocab", "vocab.tsv", "--top", "1"]);
    assert_eq!(table.lines().nth(1).map(str::trim), Some("delta"));
}

#[test]
fn reorder_undoes_a_permutation() {
    let w = DenseMatrix::from_fn(12, 4, |i, j| if i % 4 == j { 1.0 + i as f64 } else { 0.01 });
    assert_eq!(reorder_permutation(&w, &w).unwrap(), vec![0, 1, 2, 3]);
    let sigma = [2, 0, 3, 1];
    let shuffled = permute_columns(&w, &sigma);
    let perm = reorder_permutation(&shuffled, &w).unwrap();
    for (i, &p) in perm.iter().enumerate() {
        assert_eq!(sigma[p], i);
    }
    assert_eq!(permute_columns(&shuffled, &perm), w);
}

#[test]
fn topics_reference_reorders_columns() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let terms: Vec<String> = (0..8).map(|i| format!("t{i}")).collect();
    Vocabulary::new(terms, vec![1; 8]).unwrap().write_tsv_file(d.join("vocab.tsv")).unwrap();
    let w = DenseMatrix::from_fn(8, 4, |i, j| if i / 2 == j { 1.0 } else { 0.0 });
    write_dense_file(d.join("ref.mtx"), &w).unwrap();
    write_dense_file(d.join("W.mtx"), &permute_columns(&w, &[3, 2, 1, 0])).unwrap();
    let table = ok(d, &["topics", "--w", "W.mtx", "--vocab", "vocab.tsv", "--top", "1", "--reference", "ref.mtx"]);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0].split_whitespace().collect::<Vec<_>>(), ["W4", "W3", "W2", "W1"]);
    assert_eq!(lines[1].split_whitespace().collect::<Vec<_>>(), ["t0", "t2", "t4", "t6"]);
}

#[test]
fn vocabulary_mismatch_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    Vocabulary::new(vec!["a".into(), "b".into()], vec![1, 1]).unwrap().write_tsv_file(d.join("vocab.tsv")).unwrap();
    write_dense_file(d.join("W.mtx"), &DenseMatrix::from_fn(3, 1, |_, _| 1.0)).unwrap();
    assert_eq!(code(&snmf(d, &["topics", "--w", "W.mtx", "--vocab", "vocab.tsv"])), 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&snmf(d, &["factorize", "--matrix", "missing.mtx", "--k", "2"])), 3);
    assert_eq!(code(&snmf(d, &["fetch-datasets", "nosuch"])), 2);
    assert_eq!(code(&snmf(d, &["factorize", "--matrix", "x.mtx"])), 2);
    mini_matrix(d);
    assert_eq!(code(&snmf(d, &["factorize", "--matrix", "m/matrix.mtx", "--k", "0"])), 2);
    assert_eq!(code(&snmf(d, &["factorize", "--matrix", "m/matrix.mtx", "--k", "61"])), 2);
    assert_eq!(code(&snmf(d, &["factorize", "--matrix", "m/matrix.mtx", "--k", "2", "--conv", "angular:-1"])), 2);
    let singular = snmf(
        d,
        &[
            "factorize", "--matrix", "m/matrix.mtx", "--k", "8", "--algorithm", "ahcls", "--lambda-w", "1", "--lambda-h", "1",
            "--init", "centroid",
        ],
    );
    assert_eq!(code(&singular), 4, "{}", String::from_utf8_lossy(&singular.stderr));
}

#[test]
fn benchmark_records_failed_runs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    mini_matrix(d);
    let text = ok(
        d,
        &[
            "benchmark", "--matrix", "m/matrix.mtx", "--k", "8", "--seeds", "2", "--algorithms", "acls,ahcls", "--inits",
            "random,centroid", "--lambda-h", "1", "--lambda-w", "1", "--checkpoints", "0,5", "--out", "b/report.csv",
        ],
    );
    let report = sparse_nmf::bench::BenchReport::from_csv(&fs::read_to_string(d.join("b/report.csv")).unwrap()).unwrap();
    assert_eq!(report.records.len() + report.failures.len(), 8);
    assert!(!report.failures.is_empty(), "{text}");
    assert!(report.failures.iter().all(|f| f.algorithm == sparse_nmf::solver::Algorithm::Ahcls));
    assert!(text.contains("failed: ahcls"));
    assert!(d.join("b/manifest.json").is_file());
}

const MED: &str = ".I 1\n.W\nheart blood pressure artery\n.I 2\n.W\nheart blood flow valve\n.I 3\n.W\ncell tumor growth cancer\n\
.I 4\n.W\ncell tumor marrow cancer\n.I 5\n.W\nblood cell count artery\n";

fn med_archive(path: &Path) {
    let mut tar = tar::Builder::new(GzEncoder::new(fs::File::create(path).unwrap(), Compression::default()));
    let mut header = tar::Header::new_gnu();
    header.set_size(MED.len() as u64);
    header.set_mode(0o644);
    header.set_cksum();
    tar.append_data(&mut header, "med/MED.ALL", MED.as_bytes()).unwrap();
    tar.into_inner().unwrap().finish().unwrap().flush().unwrap();
}

#[test]
fn fetch_from_a_local_archive() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    med_archive(&d.join("src.tar.gz"));
    let args = ["fetch-datasets", "medlars", "--cache-dir", "cache", "--out-dir", "med", "--source", "src.tar.gz"];
    let first = ok(d, &args);
    assert!(first.contains("downloaded"), "{first}");
    let docs = fs::read_to_string(d.join("med/docs.tsv")).unwrap();
    assert_eq!(docs.lines().count(), MED.matches(".I ").count());
    let vocab = Vocabulary::read_tsv_file(d.join("med/vocab.tsv")).unwrap();
    assert!(vocab.index_of("tumor").is_some());
    assert!(vocab.index_of("valve").is_none());

    let second = ok(d, &args);
    assert!(second.contains("cache hit"), "{second}");

    let bad = ["fetch-datasets", "medlars", "--cache-dir", "fresh", "--out-dir", "m2", "--source", "src.tar.gz", "--sha256", "00"];
    assert_eq!(code(&snmf(d, &bad)), 3);
    assert!(!d.join("fresh/med.tar.gz").exists());

    let manifest = RunManifest::read(&d.join("med/manifest.json")).unwrap();
    assert_eq!(manifest.outputs.len(), 3);
}
