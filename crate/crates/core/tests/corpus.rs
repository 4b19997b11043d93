use std::fs;

use sparse_nmf::corpus::*;
use sparse_nmf::matrix::DenseMatrix;

#[test]
fn hand_countable_and_duplicates() {
    let c = build_from_texts(&["a b", "b c", "b c"], &TokenizerConfig::permissive(), Weighting::Tf).unwrap();
    assert_eq!(c.vocabulary.terms(), &["a", "b", "c"]);
    assert_eq!(
        c.matrix.to_dense(),
        DenseMatrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![1.0, 1.0, 1.0], vec![0.0, 1.0, 1.0]])
    );
    assert_eq!(c.matrix.column(1).values, c.matrix.column(2).values);
    assert_eq!(c.vocabulary.df(2), 2);
}

#[test]
fn repeated_tokens_count() {
    let c = build_from_texts(&["x x x y", "y"], &TokenizerConfig::permissive(), Weighting::Tf).unwrap();
    assert_eq!(c.matrix.to_dense(), DenseMatrix::from_rows(&[vec![3.0, 0.0], vec![1.0, 1.0]]));
}

#[test]
fn tfidf_of_ubiquitous_term_is_zero() {
    let c = build_from_texts(&["a b", "a c c", "a"], &TokenizerConfig::permissive(), Weighting::TfIdf).unwrap();
    let d = c.matrix.to_dense();
    let a = c.vocabulary.index_of("a").unwrap();
    assert!((0..3).all(|j| d[(a, j)] == 0.0));
    let cc = c.vocabulary.index_of("c").unwrap();
    assert!((d[(cc, 1)] - 2.0 * 3f64.ln()).abs() <= 1e-12);
    assert_eq!(c.empty_documents, vec![2]);
}

#[test]
fn log_entropy_weights() {
    let c = build_from_texts(&["a b", "a"], &TokenizerConfig::permissive(), Weighting::LogEntropy).unwrap();
    let d = c.matrix.to_dense();
    let b = c.vocabulary.index_of("b").unwrap();
    assert!((d[(b, 0)] - 2f64.ln()).abs() <= 1e-12);
    // "a" is spread evenly over both documents, so its global weight is zero
    let a = c.vocabulary.index_of("a").unwrap();
    assert_eq!(d[(a, 0)], 0.0);
}

#[test]
fn default_tokenizer_filters() {
    let t = TokenizerConfig::default();
    let toks: Vec<String> = t.tokenize("The Cat, a dog; x-ray!").collect();
    assert_eq!(toks, vec!["cat", "dog", "ray"]);
    let c = build_from_texts(&["cat dog", "cat", "bird"], &t, Weighting::Tf).unwrap();
    assert_eq!(c.vocabulary.terms(), &["cat"]);
    assert!(matches!(build_from_texts::<&str>(&[], &t, Weighting::Tf), Err(sparse_nmf::NmfError::EmptyCorpus)));
}

#[test]
fn top_terms_match_full_sort() {
    let vocab = Vocabulary::new((0..6).map(|i| format!("t{i}")).collect(), vec![1; 6]).unwrap();
    let w = DenseMatrix::from_columns(6, &[vec![0.1, 0.5, 0.5, 0.9, 0.0, 0.3]]);
    let top = top_terms(&w, &vocab, 0, 3);
    let names: Vec<&str> = top.iter().map(|(s, _)| s.as_str()).collect();
    assert_eq!(names, vec!["t3", "t1", "t2"]);

    let mut full: Vec<(usize, f64)> = w.column(0).iter().copied().enumerate().collect();
    full.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let all = top_terms(&w, &vocab, 0, 6);
    assert_eq!(all.iter().map(|(_, v)| *v).collect::<Vec<_>>(), full.iter().map(|p| p.1).collect::<Vec<_>>());
}

#[test]
fn vocabulary_tsv_round_trip() {
    let c = mini_corpus_matrix(Weighting::Tf).unwrap();
    let mut buf = Vec::new();
    c.vocabulary.write_tsv(&mut buf).unwrap();
    let back = Vocabulary::read_tsv(buf.as_slice()).unwrap();
    assert_eq!(back.terms(), c.vocabulary.terms());
    assert!((0..back.len()).all(|i| back.df(i) == c.vocabulary.df(i)));
}

#[test]
fn build_from_files_matches_in_memory() {
    let dir = tempfile::tempdir().unwrap();
    write_mini_corpus(dir.path()).unwrap();
    let paths = document_paths(dir.path()).unwrap();
    assert_eq!(paths.len(), MINI_CORPUS_DOCS);
    let from_files = build_matrix(&paths, &TokenizerConfig::default(), Weighting::TfIdf).unwrap();
    let in_memory = mini_corpus_matrix(Weighting::TfIdf).unwrap();
    assert_eq!(from_files.matrix, in_memory.matrix);
    assert_eq!(from_files.vocabulary.terms(), in_memory.vocabulary.terms());
    fs::remove_dir_all(dir.path()).unwrap();
}

#[test]
fn mini_corpus_shape() {
    let c = mini_corpus_matrix(Weighting::TfIdf).unwrap();
    assert_eq!(c.matrix.cols(), MINI_CORPUS_DOCS);
    assert!(c.empty_documents.is_empty());
    for (_, words) in MINI_TOPICS {
        assert!(words.iter().all(|w| c.vocabulary.index_of(w).is_some()));
    }
}
