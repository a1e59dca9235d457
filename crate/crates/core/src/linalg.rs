//! Design matrices and the handful of vector kernels the solvers need.
//!
//! Coordinate descent touches the design column by column, so both storage
//! layouts are column oriented: dense matrices are column-major and sparse
//! matrices are compressed sparse columns.

use crate::error::{Error, Result};

/// Dense column-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    /// Builds a matrix from row-major nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(n_rows, n_cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {n_cols}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    pub fn from_col_major(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {n_rows}x{n_cols} matrix",
                data.len()
            )));
        }
        Ok(Self {
            n_rows,
            n_cols,
            data,
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n_rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.n_rows + i] = v;
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.n_rows..(j + 1) * self.n_rows]
    }
}

/// Compressed sparse column matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    n_rows: usize,
    n_cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    /// Builds a CSC matrix from `(row, col, value)` triplets. Duplicates are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({i}, {j}) outside a {n_rows}x{n_cols} matrix"
                )));
            }
            sorted.push((i, j, v));
        }
        sorted.sort_by_key(|&(i, j, _)| (j, i));

        let mut col_ptr = vec![0usize; n_cols + 1];
        let mut row_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            row_idx.push(i);
            values.push(v);
            col_ptr[j + 1] += 1;
            last = Some((i, j));
        }
        for j in 0..n_cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        Ok(Self {
            n_rows,
            n_cols,
            col_ptr,
            row_idx,
            values,
        })
    }

    #[inline]
    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[range.clone()], &self.values[range])
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }
}

/// Design matrix `X` with `n` observations (rows) and `p` features (columns).
#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    Dense(DenseMatrix),
    Sparse(CscMatrix),
}

impl From<DenseMatrix> for Design {
    fn from(m: DenseMatrix) -> Self {
        Design::Dense(m)
    }
}

impl From<CscMatrix> for Design {
    fn from(m: CscMatrix) -> Self {
        Design::Sparse(m)
    }
}

impl Design {
    pub fn n_rows(&self) -> usize {
        match self {
            Design::Dense(m) => m.n_rows,
            Design::Sparse(m) => m.n_rows,
        }
    }

    pub fn n_cols(&self) -> usize {
        match self {
            Design::Dense(m) => m.n_cols,
            Design::Sparse(m) => m.n_cols,
        }
    }

    /// `⟨X_j, v⟩`
    #[inline]
    pub fn col_dot(&self, j: usize, v: &[f64]) -> f64 {
        match self {
            Design::Dense(m) => dot(m.column(j), v),
            Design::Sparse(m) => {
                let (idx, val) = m.column(j);
                idx.iter().zip(val).map(|(&i, &x)| x * v[i]).sum()
            }
        }
    }

    /// `Σ_i X_ij · g(i)` for a lazily evaluated vector.
    #[inline]
    pub fn col_dot_with<F: Fn(usize) -> f64>(&self, j: usize, g: F) -> f64 {
        match self {
            Design::Dense(m) => m
                .column(j)
                .iter()
                .enumerate()
                .map(|(i, &x)| if x == 0.0 { 0.0 } else { x * g(i) })
                .sum(),
            Design::Sparse(m) => {
                let (idx, val) = m.column(j);
                idx.iter().zip(val).map(|(&i, &x)| x * g(i)).sum()
            }
        }
    }

    /// `v += alpha · X_j`
    #[inline]
    pub fn col_axpy(&self, j: usize, alpha: f64, v: &mut [f64]) {
        match self {
            Design::Dense(m) => {
                for (vi, &x) in v.iter_mut().zip(m.column(j)) {
                    *vi += alpha * x;
                }
            }
            Design::Sparse(m) => {
                let (idx, val) = m.column(j);
                for (&i, &x) in idx.iter().zip(val) {
                    v[i] += alpha * x;
                }
            }
        }
    }

    pub fn col_sq_norms(&self) -> Vec<f64> {
        (0..self.n_cols())
            .map(|j| match self {
                Design::Dense(m) => dot(m.column(j), m.column(j)),
                Design::Sparse(m) => m.column(j).1.iter().map(|x| x * x).sum(),
            })
            .collect()
    }

    pub fn row_sq_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows()];
        match self {
            Design::Dense(m) => {
                for j in 0..m.n_cols {
                    for (o, &x) in out.iter_mut().zip(m.column(j)) {
                        *o += x * x;
                    }
                }
            }
            Design::Sparse(m) => {
                for (&i, &x) in m.row_idx.iter().zip(&m.values) {
                    out[i] += x * x;
                }
            }
        }
        out
    }

    /// `Xβ`
    pub fn matvec(&self, beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows()];
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                self.col_axpy(j, b, &mut out);
            }
        }
        out
    }

    /// `Xᵀv`
    pub fn rmatvec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n_cols()).map(|j| self.col_dot(j, v)).collect()
    }

    /// Operator 2-norm by power iteration on `XᵀX`, to `rel_tol` relative change.
    pub fn spectral_norm(&self, rel_tol: f64, max_iter: usize) -> f64 {
        let p = self.n_cols();
        if p == 0 || self.n_rows() == 0 {
            return 0.0;
        }
        // deterministic, non-degenerate start
        let mut v: Vec<f64> = (0..p).map(|j| 1.0 + (j as f64 * 0.618_033_988_7).fract()).collect();
        let norm = l2_norm(&v);
        v.iter_mut().for_each(|x| *x /= norm);
        let mut sigma_sq = 0.0;
        for _ in 0..max_iter {
            let w = self.rmatvec(&self.matvec(&v));
            let next = l2_norm(&w);
            if next == 0.0 {
                return 0.0;
            }
            v = w.into_iter().map(|x| x / next).collect();
            let converged = (next - sigma_sq).abs() <= rel_tol * next;
            sigma_sq = next;
            if converged {
                break;
            }
        }
        sigma_sq.sqrt()
    }

    /// Dense copy of row `i` (used for validation diagnostics only).
    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.n_cols())
            .map(|j| match self {
                Design::Dense(m) => m.get(i, j),
                Design::Sparse(m) => {
                    let (idx, val) = m.column(j);
                    idx.binary_search(&i).map_or(0.0, |k| val[k])
                }
            })
            .collect()
    }

    /// Sub-matrix made of the given rows, preserving the storage layout.
    pub fn select_rows(&self, rows: &[usize]) -> Design {
        match self {
            Design::Dense(m) => {
                let mut out = DenseMatrix::zeros(rows.len(), m.n_cols);
                for j in 0..m.n_cols {
                    for (k, &i) in rows.iter().enumerate() {
                        out.set(k, j, m.get(i, j));
                    }
                }
                Design::Dense(out)
            }
            Design::Sparse(m) => {
                let mut position = vec![usize::MAX; m.n_rows];
                for (k, &i) in rows.iter().enumerate() {
                    position[i] = k;
                }
                let mut triplets = Vec::new();
                for j in 0..m.n_cols {
                    let (idx, val) = m.column(j);
                    for (&i, &x) in idx.iter().zip(val) {
                        if position[i] != usize::MAX {
                            triplets.push((position[i], j, x));
                        }
                    }
                }
                Design::Sparse(
                    CscMatrix::from_triplets(rows.len(), m.n_cols, &triplets)
                        .expect("row selection stays in bounds"),
                )
            }
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn l2_norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn linf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}
