//! Top-term tables for the columns of a basis.

use sparse_nmf::convergence::match_columns;
use sparse_nmf::corpus::{top_terms, Vocabulary};
use sparse_nmf::matrix::DenseMatrix;
use sparse_nmf::NmfError;

/// For each column of `reference`, the column of `w` matched to it by
/// greedy cosine similarity.
pub fn reorder_permutation(w: &DenseMatrix, reference: &DenseMatrix) -> Result<Vec<usize>, NmfError> {
    if w.shape() != reference.shape() {
        return Err(NmfError::DimensionMismatch(format!(
            "W is {}x{} but the reference is {}x{}",
            w.rows(),
            w.cols(),
            reference.rows(),
            reference.cols()
        )));
    }
    Ok(match_columns(reference, w))
}

pub fn permute_columns(w: &DenseMatrix, perm: &[usize]) -> DenseMatrix {
    DenseMatrix::from_fn(w.rows(), perm.len(), |i, j| w[(i, perm[j])])
}

/// `t` top terms of every column, column by column.
pub fn topic_terms(w: &DenseMatrix, vocab: &Vocabulary, t: usize) -> Result<Vec<Vec<(String, f64)>>, NmfError> {
    if w.rows() != vocab.len() {
        return Err(NmfError::DimensionMismatch(format!(
            "W has {} rows but the vocabulary has {} terms",
            w.rows(),
            vocab.len()
        )));
    }
    Ok((0..w.cols()).map(|j| top_terms(w, vocab, j, t)).collect())
}

/// Columns side by side, one rank per line.
pub fn format_table(topics: &[Vec<(String, f64)>], labels: &[usize], weights: bool) -> String {
    let cell = |(term, w): &(String, f64)| if weights { format!("{term} ({w:.3})") } else { term.clone() };
    let header: Vec<String> = labels.iter().map(|l| format!("W{}", l + 1)).collect();
    let rows = topics.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = topics
        .iter()
        .zip(&header)
        .map(|(col, h)| col.iter().map(|c| cell(c).chars().count()).max().unwrap_or(0).max(h.len()))
        .collect();
    let line = |cells: Vec<String>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut out = vec![line(header.clone())];
    for r in 0..rows {
        out.push(line(topics.iter().map(|col| col.get(r).map(cell).unwrap_or_default()).collect()));
    }
    out.join("\n") + "\n"
}
