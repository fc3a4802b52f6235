//! Small dense matrix helpers used by the model builders.
//!
//! Everything here works on row-major `f64` storage. The matrices involved
//! (incidence matrices, demand Laplacians, basis blocks) are small, so plain
//! Gaussian elimination is all we need.

use std::fmt;

/// Pivot tolerance used for rank decisions.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row vectors. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(idx.len(), self.cols);
        for (k, &i) in idx.iter().enumerate() {
            out.row_mut(k).copy_from_slice(self.row(i));
        }
        out
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            for (k, &j) in idx.iter().enumerate() {
                out[(i, k)] = self[(i, j)];
            }
        }
        out
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = out.row_mut(i);
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    /// Returns `None` for non-square or numerically singular input.
    pub fn inverse(&self) -> Option<DenseMatrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = DenseMatrix::identity(n);
        for col in 0..n {
            let (pivot, best) = (col..n)
                .map(|r| (r, a[(r, col)].abs()))
                .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best <= RANK_TOL {
                return None;
            }
            a.swap_rows(col, pivot);
            inv.swap_rows(col, pivot);
            let p = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[(r, j)] -= f * a[(col, j)];
                    inv[(r, j)] -= f * inv[(col, j)];
                }
            }
        }
        Some(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Result of a greedy row-independence scan.
#[derive(Debug, Clone)]
pub struct RowBasis {
    /// Indices of the kept rows, ascending. Each row is kept iff it is
    /// independent of the rows kept before it.
    pub kept: Vec<usize>,
    /// One vector `y` per dropped row with `yᵀ A = 0`; together they span the
    /// left kernel of `A`.
    pub left_kernel: Vec<Vec<f64>>,
}

/// Scans rows in index order and keeps each one that is linearly independent
/// of those already kept. Dropped rows yield explicit left-kernel vectors.
pub fn greedy_row_basis(a: &DenseMatrix, tol: f64) -> RowBasis {
    let n = a.rows();
    // echelon rows: (reduced row, combination over original rows, pivot col)
    let mut echelon: Vec<(Vec<f64>, Vec<f64>, usize)> = Vec::new();
    let mut kept = Vec::new();
    let mut left_kernel = Vec::new();
    let scale = a.max_abs().max(1.0);

    for i in 0..n {
        let mut v = a.row(i).to_vec();
        let mut combo = vec![0.0; n];
        combo[i] = 1.0;
        for (row, rc, p) in &echelon {
            let f = v[*p] / row[*p];
            if f != 0.0 {
                for (x, y) in v.iter_mut().zip(row) {
                    *x -= f * y;
                }
                for (x, y) in combo.iter_mut().zip(rc) {
                    *x -= f * y;
                }
            }
        }
        let (pivot, mag) = v.iter().enumerate().fold((0, 0.0_f64), |acc, (j, x)| {
            if x.abs() > acc.1 {
                (j, x.abs())
            } else {
                acc
            }
        });
        if mag <= tol * scale {
            left_kernel.push(combo);
        } else {
            kept.push(i);
            echelon.push((v, combo, pivot));
        }
    }
    RowBasis { kept, left_kernel }
}

/// Lowest-index maximal set of linearly independent columns.
pub fn greedy_column_basis(a: &DenseMatrix, tol: f64) -> Vec<usize> {
    greedy_row_basis(&a.transpose(), tol).kept
}
