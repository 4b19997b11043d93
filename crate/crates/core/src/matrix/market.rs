//! Matrix Market I/O: coordinate format for sparse data matrices and array
//! format for dense factors.
//!
//! Values are written with Rust's shortest round-trip float formatting, so a
//! write followed by a read reproduces every value bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{NmfError, Result};

use super::dense::DenseMatrix;
use super::sparse::SparseMatrix;

const COORDINATE_HEADER: &str = "%%MatrixMarket matrix coordinate real general";
const ARRAY_HEADER: &str = "%%MatrixMarket matrix array real general";

#[derive(Debug, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

struct Header {
    layout: Layout,
    line_no: usize,
}

fn parse_error(line: usize, msg: impl Into<String>) -> NmfError {
    NmfError::Parse { line, msg: msg.into() }
}

fn parse_header(line: &str) -> Result<Layout> {
    let fields: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(parse_error(1, "expected a %%MatrixMarket matrix header"));
    }
    let layout = match fields[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_error(1, format!("unsupported format '{other}'"))),
    };
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(parse_error(1, format!("unsupported field '{}'", fields[3])));
    }
    if fields[4] != "general" {
        return Err(parse_error(1, format!("unsupported symmetry '{}'", fields[4])));
    }
    Ok(layout)
}

/// Yields (line number, trimmed content) for non-comment, non-blank lines
/// after the header.
fn data_lines<R: BufRead>(reader: R) -> Result<(Header, Vec<(usize, String)>)> {
    let mut lines = reader.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| parse_error(1, "empty file"))?;
    let layout = parse_header(&first?)?;
    let mut out = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        out.push((idx + 1, t.to_string()));
    }
    Ok((Header { layout, line_no: 1 }, out))
}

fn parse_usize(s: Option<&str>, line: usize, what: &str) -> Result<usize> {
    s.ok_or_else(|| parse_error(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_error(line, format!("invalid {what}")))
}

fn parse_f64(s: Option<&str>, line: usize) -> Result<f64> {
    s.ok_or_else(|| parse_error(line, "missing value"))?
        .parse()
        .map_err(|_| parse_error(line, "invalid value"))
}

pub fn read_sparse<R: Read>(reader: R) -> Result<SparseMatrix> {
    let (header, lines) = data_lines(BufReader::new(reader))?;
    if header.layout != Layout::Coordinate {
        return Err(parse_error(header.line_no, "expected coordinate format for a sparse matrix"));
    }
    let mut it = lines.into_iter();
    let (size_line, size) = it.next().ok_or_else(|| parse_error(2, "missing size line"))?;
    let mut f = size.split_whitespace();
    let rows = parse_usize(f.next(), size_line, "row count")?;
    let cols = parse_usize(f.next(), size_line, "column count")?;
    let nnz = parse_usize(f.next(), size_line, "entry count")?;
    let mut triplets = Vec::with_capacity(nnz);
    for (line, content) in it {
        let mut f = content.split_whitespace();
        let i = parse_usize(f.next(), line, "row index")?;
        let j = parse_usize(f.next(), line, "column index")?;
        let v = parse_f64(f.next(), line)?;
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err(parse_error(line, format!("index ({i}, {j}) outside {rows}x{cols}")));
        }
        if !v.is_finite() || v < 0.0 {
            return Err(parse_error(line, format!("value {v} is not a nonnegative real")));
        }
        triplets.push((i - 1, j - 1, v));
    }
    if triplets.len() != nnz {
        return Err(parse_error(size_line, format!("declared {nnz} entries, found {}", triplets.len())));
    }
    SparseMatrix::from_triplets(rows, cols, &triplets)
}

pub fn write_sparse<W: Write>(writer: W, a: &SparseMatrix) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{COORDINATE_HEADER}")?;
    writeln!(w, "{} {} {}", a.rows(), a.cols(), a.nnz())?;
    for j in 0..a.cols() {
        for (i, v) in a.column(j).iter() {
            writeln!(w, "{} {} {}", i + 1, j + 1, v)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads an array-format matrix (column-major values).
pub fn read_dense<R: Read>(reader: R) -> Result<DenseMatrix> {
    let (header, lines) = data_lines(BufReader::new(reader))?;
    if header.layout != Layout::Array {
        return Err(parse_error(header.line_no, "expected array format for a dense matrix"));
    }
    let mut it = lines.into_iter();
    let (size_line, size) = it.next().ok_or_else(|| parse_error(2, "missing size line"))?;
    let mut f = size.split_whitespace();
    let rows = parse_usize(f.next(), size_line, "row count")?;
    let cols = parse_usize(f.next(), size_line, "column count")?;
    let mut values = Vec::with_capacity(rows * cols);
    for (line, content) in it {
        for tok in content.split_whitespace() {
            let v = parse_f64(Some(tok), line)?;
            if !v.is_finite() {
                return Err(parse_error(line, "non-finite value"));
            }
            values.push(v);
        }
    }
    if values.len() != rows * cols {
        return Err(parse_error(size_line, format!("expected {} values, found {}", rows * cols, values.len())));
    }
    Ok(DenseMatrix::from_fn(rows, cols, |i, j| values[j * rows + i]))
}

pub fn write_dense<W: Write>(writer: W, m: &DenseMatrix) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{ARRAY_HEADER}")?;
    writeln!(w, "{} {}", m.rows(), m.cols())?;
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            writeln!(w, "{}", m[(i, j)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_sparse_file(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    read_sparse(File::open(path)?)
}

pub fn write_sparse_file(path: impl AsRef<Path>, a: &SparseMatrix) -> Result<()> {
    write_sparse(File::create(path)?, a)
}

pub fn read_dense_file(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    read_dense(File::open(path)?)
}

pub fn write_dense_file(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    write_dense(File::create(path)?, m)
}
