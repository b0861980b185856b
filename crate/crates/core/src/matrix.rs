//! Dense row-major matrix with the few factorizations the pipeline needs.
//!
//! Problem sizes here are tiny (tens of assets), so the routines favor
//! clarity and determinism over blocking or pivoting sophistication:
//! cyclic Jacobi for symmetric eigenvalues, a semidefinite-tolerant
//! Cholesky for sampling, Gaussian elimination for linear solves.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from a flat row-major buffer; the length must be rows * cols.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput {
                field: "data".into(),
                reason: format!(
                    "expected {} values for a {rows}x{cols} matrix, got {}",
                    rows * cols,
                    data.len()
                ),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("matrix rows".into()));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::InvalidInput {
                    field: "rows".into(),
                    reason: "ragged rows".into(),
                });
            }
            data.extend_from_slice(r);
        }
        Matrix::from_vec(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if math::abs(self.get(i, j) - self.get(j, i)) > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            out[i] = math::dot(self.row(i), v);
        }
        out
    }

    /// w' M w for square M.
    pub fn quadratic_form(&self, w: &[f64]) -> f64 {
        debug_assert!(self.is_square());
        math::dot(w, &self.matvec(w))
    }

    /// Selects the principal submatrix for the given index set (square input).
    pub fn principal_submatrix(&self, idx: &[usize]) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::InvalidInput {
                field: "matrix".into(),
                reason: "principal submatrix needs a square matrix".into(),
            });
        }
        let mut out = Matrix::zeros(idx.len(), idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                if i >= self.rows || j >= self.rows {
                    return Err(Error::InvalidInput {
                        field: "idx".into(),
                        reason: "index out of range".into(),
                    });
                }
                out.set(a, b, self.get(i, j));
            }
        }
        Ok(out)
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations,
    /// returned ascending. Converges quadratically for the sizes used here.
    pub fn sym_eigenvalues(&self) -> Result<Vec<f64>> {
        if !self.is_square() {
            return Err(Error::InvalidInput {
                field: "matrix".into(),
                reason: "eigenvalues need a square matrix".into(),
            });
        }
        let n = self.rows;
        if n == 0 {
            return Err(Error::EmptyInput("matrix".into()));
        }
        let mut a = self.clone();
        let scale: f64 = {
            let mut s: f64 = 0.0;
            for i in 0..n {
                s = s.max(math::abs(a.get(i, i)));
                for j in 0..n {
                    s = s.max(math::abs(a.get(i, j)));
                }
            }
            s.max(1.0)
        };
        for _sweep in 0..100 {
            let mut off = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a.get(i, j) * a.get(i, j);
                }
            }
            if math::sqrt(off) <= 1e-14 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    if math::abs(apq) <= 1e-300 {
                        continue;
                    }
                    let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + math::sqrt(theta * theta + 1.0))
                    } else {
                        -1.0 / (-theta + math::sqrt(theta * theta + 1.0))
                    };
                    let c = 1.0 / math::sqrt(t * t + 1.0);
                    let s = t * c;
                    for k in 0..n {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, c * akp - s * akq);
                        a.set(k, q, s * akp + c * akq);
                    }
                    for k in 0..n {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.set(p, k, c * apk - s * aqk);
                        a.set(q, k, s * apk + c * aqk);
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
        eig.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalues are finite"));
        Ok(eig)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.sym_eigenvalues()?[0])
    }

    /// Lower-triangular L with L L' ~= self for a symmetric positive
    /// semidefinite matrix. Pivots below `tol` (relative to the largest
    /// diagonal) are treated as zero, so rank-deficient covariances are
    /// accepted; a pivot materially below zero is an error.
    pub fn cholesky_psd(&self, tol: f64) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::InvalidInput {
                field: "matrix".into(),
                reason: "cholesky needs a square matrix".into(),
            });
        }
        let n = self.rows;
        let mut max_diag: f64 = 0.0;
        for i in 0..n {
            max_diag = max_diag.max(math::abs(self.get(i, i)));
        }
        let cut = tol * max_diag.max(1e-300);
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l.get(j, k) * l.get(j, k);
            }
            if d > cut {
                let ljj = math::sqrt(d);
                l.set(j, j, ljj);
                for i in (j + 1)..n {
                    let mut v = self.get(i, j);
                    for k in 0..j {
                        v -= l.get(i, k) * l.get(j, k);
                    }
                    l.set(i, j, v / ljj);
                }
            } else if d >= -cut {
                // semidefinite direction: zero column
                l.set(j, j, 0.0);
            } else {
                return Err(Error::Numeric(format!(
                    "matrix is not positive semidefinite (pivot {d:.3e} at {j})"
                )));
            }
        }
        Ok(l)
    }

    /// Solves self * x = b by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if !self.is_square() || b.len() != self.rows {
            return Err(Error::InvalidInput {
                field: "system".into(),
                reason: "solve needs a square matrix and a matching rhs".into(),
            });
        }
        let n = self.rows;
        let mut aug = self.clone();
        let mut x: Vec<f64> = b.to_vec();
        for col in 0..n {
            let mut piv = col;
            for r in (col + 1)..n {
                if math::abs(aug.get(r, col)) > math::abs(aug.get(piv, col)) {
                    piv = r;
                }
            }
            if math::abs(aug.get(piv, col)) < 1e-300 {
                return Err(Error::Numeric("singular system in solve".into()));
            }
            if piv != col {
                for c in 0..n {
                    let tmp = aug.get(col, c);
                    aug.set(col, c, aug.get(piv, c));
                    aug.set(piv, c, tmp);
                }
                x.swap(col, piv);
            }
            for r in (col + 1)..n {
                let f = aug.get(r, col) / aug.get(col, col);
                if f == 0.0 {
                    continue;
                }
                for c in col..n {
                    let v = aug.get(r, c) - f * aug.get(col, c);
                    aug.set(r, c, v);
                }
                x[r] -= f * x[col];
            }
        }
        for col in (0..n).rev() {
            let mut v = x[col];
            for c in (col + 1)..n {
                v -= aug.get(col, c) * x[c];
            }
            x[col] = v / aug.get(col, col);
        }
        Ok(x)
    }
}
