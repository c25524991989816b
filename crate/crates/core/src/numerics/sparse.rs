use crate::error::{Error, Result};

use super::DenseMatrix;

/// Compressed sparse row matrix.
///
/// Column indices are strictly increasing inside each row, so every product
/// below accumulates in ascending column order.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRowMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseRowMatrix {
    /// Builds the matrix from per-row `(column, value)` lists.
    pub fn from_rows(cols: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for (i, row) in rows.iter().enumerate() {
            let mut prev: Option<usize> = None;
            for &(c, v) in row {
                if c >= cols {
                    return Err(Error::DimensionMismatch(format!(
                        "row {i}: column {c} out of range for {cols} columns"
                    )));
                }
                if prev.is_some_and(|p| c <= p) {
                    return Err(Error::DimensionMismatch(format!(
                        "row {i}: column indices not strictly increasing"
                    )));
                }
                if !v.is_finite() {
                    return Err(Error::NonFinite("sparse matrix values"));
                }
                prev = Some(c);
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).1.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row_sum(i)).collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                out[(i, c)] = v;
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} sparse times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&c, &a)| a * v[c]).sum()
            })
            .collect())
    }

    /// `selfᵀ · v`.
    pub fn t_matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "({}x{} sparse)ᵀ times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &s) in v.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, &a) in cols.iter().zip(vals) {
                out[c] += a * s;
            }
        }
        Ok(out)
    }
}

/// `S · D` touching only the stored entries of `S`.
pub fn sparse_dense_product(s: &SparseRowMatrix, d: &DenseMatrix) -> Result<DenseMatrix> {
    if s.cols != d.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} sparse times {}x{}",
            s.rows,
            s.cols,
            d.rows(),
            d.cols()
        )));
    }
    let mut out = DenseMatrix::zeros(s.rows, d.cols());
    for i in 0..s.rows {
        let (cols, vals) = s.row(i);
        let out_row = out.row_mut(i);
        for (&c, &a) in cols.iter().zip(vals) {
            for (o, &b) in out_row.iter_mut().zip(d.row(c)) {
                *o += a * b;
            }
        }
    }
    Ok(out)
}
