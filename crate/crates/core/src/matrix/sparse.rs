use crate::error::{NmfError, Result};

use super::dense::DenseMatrix;

/// Nonnegative matrix in compressed sparse column form.
///
/// Row indices inside a column are strictly increasing and no explicit zeros
/// are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

/// A borrowed column: parallel slices of row indices and values.
#[derive(Debug, Clone, Copy)]
pub struct SparseColumn<'a> {
    pub rows: &'a [usize],
    pub values: &'a [f64],
}

impl<'a> SparseColumn<'a> {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.rows.iter().copied().zip(self.values.iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.rows.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }
}

impl SparseMatrix {
    /// Builds from raw CSC arrays, validating every invariant.
    pub fn from_csc(
        rows: usize,
        cols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if col_ptr.len() != cols + 1 || col_ptr[0] != 0 {
            return Err(NmfError::InvalidValue("malformed column pointer array".into()));
        }
        if row_idx.len() != values.len() || *col_ptr.last().unwrap() != values.len() {
            return Err(NmfError::InvalidValue("index and value arrays disagree".into()));
        }
        for j in 0..cols {
            let (lo, hi) = (col_ptr[j], col_ptr[j + 1]);
            if lo > hi {
                return Err(NmfError::InvalidValue("column pointers decrease".into()));
            }
            for p in lo..hi {
                if row_idx[p] >= rows {
                    return Err(NmfError::InvalidValue(format!("row index {} out of range", row_idx[p])));
                }
                if p > lo && row_idx[p] <= row_idx[p - 1] {
                    return Err(NmfError::InvalidValue(format!("row indices not increasing in column {j}")));
                }
                let v = values[p];
                if !v.is_finite() || v <= 0.0 {
                    return Err(NmfError::InvalidValue(format!(
                        "stored value {v} at ({}, {j}) must be positive and finite",
                        row_idx[p]
                    )));
                }
            }
        }
        Ok(SparseMatrix { rows, cols, col_ptr, row_idx, values })
    }

    /// Builds from (row, col, value) triplets. Duplicates are summed and
    /// zeros dropped; negative or non-finite values are rejected.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= rows || j >= cols {
                return Err(NmfError::DimensionMismatch(format!(
                    "entry ({i}, {j}) outside {rows}x{cols}"
                )));
            }
            if !v.is_finite() || v < 0.0 {
                return Err(NmfError::InvalidValue(format!("entry ({i}, {j}) = {v} is not a nonnegative real")));
            }
            sorted.push((i, j, v));
        }
        sorted.sort_by_key(|t| (t.1, t.0));

        let mut col_ptr = vec![0usize; cols + 1];
        let mut row_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_idx.push(i);
            values.push(v);
            col_ptr[j + 1] += 1;
            last = Some((i, j));
        }
        for j in 0..cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let mut m = SparseMatrix { rows, cols, col_ptr, row_idx, values };
        m.drop_zeros();
        Ok(m)
    }

    /// Converts a dense nonnegative matrix.
    pub fn from_dense(dense: &DenseMatrix) -> Result<Self> {
        let mut triplets = Vec::new();
        for j in 0..dense.cols() {
            for i in 0..dense.rows() {
                let v = dense[(i, j)];
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(dense.rows(), dense.cols(), &triplets)
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            rows: n,
            cols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    fn drop_zeros(&mut self) {
        if self.values.iter().all(|v| *v != 0.0) {
            return;
        }
        let mut col_ptr = vec![0usize; self.cols + 1];
        let mut row_idx = Vec::with_capacity(self.values.len());
        let mut values = Vec::with_capacity(self.values.len());
        for j in 0..self.cols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                if self.values[p] != 0.0 {
                    row_idx.push(self.row_idx[p]);
                    values.push(self.values[p]);
                }
            }
            col_ptr[j + 1] = values.len();
        }
        self.col_ptr = col_ptr;
        self.row_idx = row_idx;
        self.values = values;
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn column(&self, j: usize) -> SparseColumn<'_> {
        let (lo, hi) = (self.col_ptr[j], self.col_ptr[j + 1]);
        SparseColumn { rows: &self.row_idx[lo..hi], values: &self.values[lo..hi] }
    }

    pub fn columns(&self) -> impl Iterator<Item = SparseColumn<'_>> {
        (0..self.cols).map(move |j| self.column(j))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let col = self.column(j);
        match col.rows.binary_search(&i) {
            Ok(p) => col.values[p],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for j in 0..self.cols {
            for (i, v) in self.column(j).iter() {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// Dense copy of column `j`.
    pub fn column_dense(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (i, v) in self.column(j).iter() {
            out[i] = v;
        }
        out
    }

    pub fn column_norms(&self) -> Vec<f64> {
        self.columns().map(|c| c.norm_sq().sqrt()).collect()
    }

    /// `trace(AᵀA) = ‖A‖²_F`.
    pub fn frobenius_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.rows + 1];
        for &i in &self.row_idx {
            counts[i + 1] += 1;
        }
        for i in 0..self.rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut row_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for j in 0..self.cols {
            for (i, v) in self.column(j).iter() {
                let p = next[i];
                row_idx[p] = j;
                values[p] = v;
                next[i] += 1;
            }
        }
        SparseMatrix { rows: self.cols, cols: self.rows, col_ptr: counts, row_idx, values }
    }

    /// `A · X` for dense `X` (n×k), giving m×k.
    pub fn mul_dense(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.rows() != self.cols {
            return Err(NmfError::DimensionMismatch(format!(
                "sparse {}x{} times dense {}x{}",
                self.rows,
                self.cols,
                x.rows(),
                x.cols()
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, x.cols());
        for j in 0..self.cols {
            let xr = x.row(j);
            for (i, v) in self.column(j).iter() {
                for (o, &b) in out.row_mut(i).iter_mut().zip(xr) {
                    *o += v * b;
                }
            }
        }
        Ok(out)
    }

    /// `Aᵀ · X` for dense `X` (m×k), giving n×k.
    pub fn transpose_mul_dense(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.rows() != self.rows {
            return Err(NmfError::DimensionMismatch(format!(
                "transpose of sparse {}x{} times dense {}x{}",
                self.rows,
                self.cols,
                x.rows(),
                x.cols()
            )));
        }
        let k = x.cols();
        let mut out = DenseMatrix::zeros(self.cols, k);
        for j in 0..self.cols {
            let o = out.row_mut(j);
            for (i, v) in self.column(j).iter() {
                for (acc, &b) in o.iter_mut().zip(x.row(i)) {
                    *acc += v * b;
                }
            }
        }
        Ok(out)
    }

    /// `A · Aᵀ` as a sparse symmetric m×m matrix.
    ///
    /// Entry (i, j) is accumulated over documents in ascending order for both
    /// (i, j) and (j, i), so the result is exactly symmetric.
    pub fn mul_self_transpose(&self) -> SparseMatrix {
        let at = self.transpose();
        let m = self.rows;
        let mut acc = vec![0.0; m];
        let mut touched = vec![false; m];
        let mut pattern: Vec<usize> = Vec::new();
        let mut col_ptr = vec![0usize; m + 1];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for t in 0..m {
            // column t of C: sum over documents d containing t of A[t,d] * A[:,d]
            for (d, w) in at.column(t).iter() {
                for (i, v) in self.column(d).iter() {
                    if !touched[i] {
                        touched[i] = true;
                        pattern.push(i);
                    }
                    acc[i] += w * v;
                }
            }
            pattern.sort_unstable();
            for &i in &pattern {
                if acc[i] != 0.0 {
                    row_idx.push(i);
                    values.push(acc[i]);
                }
                acc[i] = 0.0;
                touched[i] = false;
            }
            pattern.clear();
            col_ptr[t + 1] = values.len();
        }
        SparseMatrix { rows: m, cols: m, col_ptr, row_idx, values }
    }

    /// Σ over columns of nnz², an upper bound on the work and fill of `A·Aᵀ`.
    pub fn self_product_cost(&self) -> u128 {
        self.columns().map(|c| (c.nnz() as u128).pow(2)).sum()
    }

    /// Sub-matrix made of the given columns, in order.
    pub fn select_columns(&self, cols: &[usize]) -> SparseMatrix {
        let mut col_ptr = vec![0usize; cols.len() + 1];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for (c, &j) in cols.iter().enumerate() {
            let col = self.column(j);
            row_idx.extend_from_slice(col.rows);
            values.extend_from_slice(col.values);
            col_ptr[c + 1] = values.len();
        }
        SparseMatrix { rows: self.rows, cols: cols.len(), col_ptr, row_idx, values }
    }
}
