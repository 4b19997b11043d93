//! Term-by-document matrices from raw text.

mod mini;
mod tokenize;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NmfError, Result};
use crate::matrix::{DenseMatrix, SparseMatrix};

pub use mini::{mini_corpus_documents, mini_corpus_matrix, write_mini_corpus, MINI_CORPUS_DOCS, MINI_TOPICS};
pub use tokenize::{TokenizerConfig, ENGLISH_STOPWORDS};

/// Bidirectional term ↔ row map with document frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    df: Vec<usize>,
}

impl Vocabulary {
    /// Terms must be unique; row `i` is `terms[i]`.
    pub fn new(terms: Vec<String>, df: Vec<usize>) -> Result<Self> {
        if terms.len() != df.len() {
            return Err(NmfError::DimensionMismatch("terms and document frequencies differ in length".into()));
        }
        let mut index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(NmfError::InvalidValue(format!("duplicate term '{t}'")));
            }
        }
        Ok(Vocabulary { terms, index, df })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, i: usize) -> &str {
        &self.terms[i]
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn df(&self, i: usize) -> usize {
        self.df[i]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// `index<TAB>term<TAB>df`, one line per term.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, (t, df)) in self.terms.iter().zip(&self.df).enumerate() {
            writeln!(w, "{i}\t{t}\t{df}")?;
        }
        Ok(())
    }

    pub fn read_tsv<R: Read>(r: R) -> Result<Self> {
        let mut terms = Vec::new();
        let mut df = Vec::new();
        for (no, line) in BufReader::new(r).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: &str| NmfError::Parse { line: no + 1, msg: msg.to_string() };
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(err("expected index, term and df"));
            }
            let idx: usize = f[0].parse().map_err(|_| err("invalid index"))?;
            if idx != terms.len() {
                return Err(err("indices must be dense and ascending"));
            }
            terms.push(f[1].to_string());
            df.push(f[2].parse().map_err(|_| err("invalid df"))?);
        }
        Vocabulary::new(terms, df)
    }

    pub fn write_tsv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        self.write_tsv(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn read_tsv_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_tsv(fs::File::open(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// Raw term counts.
    Tf,
    /// `tf · ln(n / df)`.
    TfIdf,
    /// `ln(1 + tf) · (1 + Σ_j p_ij ln p_ij / ln n)` with `p_ij = tf_ij / gf_i`.
    LogEntropy,
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::Tf => "tf",
            Weighting::TfIdf => "tfidf",
            Weighting::LogEntropy => "logent",
        })
    }
}

impl FromStr for Weighting {
    type Err = NmfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tf" => Ok(Weighting::Tf),
            "tfidf" => Ok(Weighting::TfIdf),
            "logent" => Ok(Weighting::LogEntropy),
            other => Err(NmfError::InvalidConfig(format!("unknown weighting '{other}' (expected tf, tfidf, logent)"))),
        }
    }
}

/// A weighted term-by-document matrix and its vocabulary.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub matrix: SparseMatrix,
    pub vocabulary: Vocabulary,
    /// Documents that kept no terms; their columns are zero.
    pub empty_documents: Vec<usize>,
}

/// Builds the matrix from in-memory documents; column `j` is document `j`.
pub fn build_from_texts<S: AsRef<str> + Sync>(
    docs: &[S],
    tokenizer: &TokenizerConfig,
    weighting: Weighting,
) -> Result<Corpus> {
    if docs.is_empty() {
        return Err(NmfError::EmptyCorpus);
    }
    let counts: Vec<BTreeMap<String, usize>> = docs
        .par_iter()
        .map(|d| {
            let mut c = BTreeMap::new();
            for tok in tokenizer.tokenize(d.as_ref()) {
                *c.entry(tok).or_insert(0) += 1;
            }
            c
        })
        .collect();
    if counts.iter().all(BTreeMap::is_empty) {
        return Err(NmfError::EmptyCorpus);
    }

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for c in &counts {
        for t in c.keys() {
            *df.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let kept: Vec<(&str, usize)> = df.into_iter().filter(|(_, d)| *d >= tokenizer.min_df.max(1)).collect();
    let terms: Vec<String> = kept.iter().map(|(t, _)| t.to_string()).collect();
    let dfs: Vec<usize> = kept.iter().map(|(_, d)| *d).collect();
    let vocabulary = Vocabulary::new(terms, dfs)?;

    let n = docs.len();
    let m = vocabulary.len();
    let mut raw: Vec<(usize, usize, f64)> = Vec::new();
    for (j, c) in counts.iter().enumerate() {
        for (t, &tf) in c {
            if let Some(i) = vocabulary.index_of(t) {
                raw.push((i, j, tf as f64));
            }
        }
    }

    let weights = weigh(&raw, &vocabulary, m, n, weighting);
    let triplets: Vec<(usize, usize, f64)> =
        raw.iter().zip(weights).map(|(&(i, j, _), w)| (i, j, w)).filter(|t| t.2 > 0.0).collect();
    let matrix = SparseMatrix::from_triplets(m, n, &triplets)?;

    let empty_documents: Vec<usize> = (0..n).filter(|&j| matrix.column(j).nnz() == 0).collect();
    if !empty_documents.is_empty() {
        log::warn!("{} documents kept no terms and are zero columns", empty_documents.len());
    }
    Ok(Corpus { matrix, vocabulary, empty_documents })
}

fn weigh(raw: &[(usize, usize, f64)], vocab: &Vocabulary, m: usize, n: usize, weighting: Weighting) -> Vec<f64> {
    match weighting {
        Weighting::Tf => raw.iter().map(|t| t.2).collect(),
        Weighting::TfIdf => raw
            .iter()
            .map(|&(i, _, tf)| tf * (n as f64 / vocab.df(i) as f64).ln())
            .collect(),
        Weighting::LogEntropy => {
            let mut gf = vec![0.0; m];
            for &(i, _, tf) in raw {
                gf[i] += tf;
            }
            let mut entropy = vec![0.0; m];
            for &(i, _, tf) in raw {
                let p = tf / gf[i];
                entropy[i] += p * p.ln();
            }
            let log_n = (n as f64).ln();
            let global: Vec<f64> = entropy
                .iter()
                .map(|e| if log_n > 0.0 { (1.0 + e / log_n).max(0.0) } else { 1.0 })
                .collect();
            raw.iter().map(|&(i, _, tf)| (1.0 + tf).ln() * global[i]).collect()
        }
    }
}

/// Reads every regular file of `dir` (sorted by name) as one document.
pub fn document_paths(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    Ok(paths)
}

/// Builds the matrix from document files; column order follows `paths`.
pub fn build_matrix(paths: &[PathBuf], tokenizer: &TokenizerConfig, weighting: Weighting) -> Result<Corpus> {
    let texts: Vec<String> = paths
        .par_iter()
        .map(|p| fs::read(p).map(|b| String::from_utf8_lossy(&b).into_owned()))
        .collect::<std::io::Result<_>>()?;
    build_from_texts(&texts, tokenizer, weighting)
}

/// The `t` highest-weighted terms of column `j` of `w`, ties to the lower row.
pub fn top_terms(w: &DenseMatrix, vocabulary: &Vocabulary, j: usize, t: usize) -> Vec<(String, f64)> {
    let col = w.column(j);
    let mut order: Vec<usize> = (0..col.len()).collect();
    order.sort_by(|&a, &b| col[b].total_cmp(&col[a]).then(a.cmp(&b)));
    order.into_iter().take(t).map(|i| (vocabulary.term(i).to_string(), col[i])).collect()
}
