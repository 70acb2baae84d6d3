//! Small dense linear-algebra toolkit: row-major matrices, Cholesky
//! factorization with log-determinant accumulation, and a cyclic Jacobi
//! eigensolver for symmetric matrices.
//!
//! Everything here is dependency-free on purpose; the matrices in this
//! pipeline are small (band count 9, affinity graphs of a few hundred
//! vertices), so robustness and determinism beat raw speed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
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

    /// Build from row-major data; `data.len()` must equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "matrix data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch("ragged rows".into()));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.at(r, c));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.at(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch("matvec length".into()));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Max absolute asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.at(i, j) - self.at(j, i)).abs());
            }
        }
        worst
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.at(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Add `lambda` to every diagonal entry in place.
    pub fn add_diagonal(&mut self, lambda: f64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            let v = self.at(i, i);
            self.set(i, i, v + lambda);
        }
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>, // row-major n x n, upper part zero
}

impl Cholesky {
    /// Factor a symmetric matrix. Fails with a numerical error if the matrix
    /// is not positive definite.
    pub fn factor(a: &Matrix) -> Result<Cholesky> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch("Cholesky of non-square matrix".into()));
        }
        let n = a.rows();
        let mut l = vec![0.0_f64; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = a.at(i, j);
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if sum <= 0.0 || !sum.is_finite() {
                        return Err(Error::Numerical(format!(
                            "matrix not positive definite (pivot {} at row {})",
                            sum, i
                        )));
                    }
                    l[i * n + j] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        Ok(Cholesky { n, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry of the lower factor (zero above the diagonal).
    #[inline]
    pub fn lower_entry(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.n + j]
    }

    /// log(det A) accumulated from the factor diagonal; never forms det A.
    pub fn log_det(&self) -> f64 {
        (0..self.n)
            .map(|i| self.lower[i * self.n + i].ln())
            .sum::<f64>()
            * 2.0
    }

    /// Solve `L y = b` (forward substitution).
    pub fn solve_lower(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch("solve_lower length".into()));
        }
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut sum = b[i];
            for k in 0..i {
                sum -= self.lower[i * n + k] * y[k];
            }
            y[i] = sum / self.lower[i * n + i];
        }
        Ok(y)
    }

    /// Solve `L^T x = b` (back substitution).
    pub fn solve_lower_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch("solve_lower_transpose length".into()));
        }
        let n = self.n;
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut sum = b[i];
            for k in (i + 1)..n {
                sum -= self.lower[k * n + i] * x[k];
            }
            x[i] = sum / self.lower[i * n + i];
        }
        Ok(x)
    }

    /// Solve `A x = b` with `A = L L^T`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let y = self.solve_lower(b)?;
        self.solve_lower_transpose(&y)
    }

    /// Compute `L^{-1} B L^{-T}` for symmetric `B` (congruence transform used
    /// to reduce a generalized symmetric eigenproblem to standard form).
    pub fn whiten(&self, b: &Matrix) -> Result<Matrix> {
        if b.rows() != self.n || b.cols() != self.n {
            return Err(Error::DimensionMismatch("whiten dimension".into()));
        }
        let n = self.n;
        // Columns of C = L^{-1} B
        let mut c = Matrix::zeros(n, n);
        for j in 0..n {
            let col: Vec<f64> = (0..n).map(|i| b.at(i, j)).collect();
            let y = self.solve_lower(&col)?;
            for i in 0..n {
                c.set(i, j, y[i]);
            }
        }
        // M = C L^{-T}  <=>  M^T = L^{-1} C^T
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            let row: Vec<f64> = (0..n).map(|j| c.at(i, j)).collect();
            let y = self.solve_lower(&row)?;
            for j in 0..n {
                m.set(i, j, y[j]);
            }
        }
        // Symmetrize against round-off.
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m.at(i, j) + m.at(j, i));
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        Ok(m)
    }
}

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, ordered to match `values`.
    pub vectors: Matrix,
}

/// Off-diagonal Frobenius tolerance, relative to the matrix norm.
const JACOBI_TOL: f64 = 1e-10;
/// Hard cap on full sweeps; the solver reports non-convergence beyond it.
const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigensolver for symmetric matrices.
///
/// Iterates plane rotations over all off-diagonal pairs until the
/// off-diagonal Frobenius norm falls below `1e-10` times the matrix norm,
/// capped at 100 sweeps. Eigenvalues are returned ascending with matching
/// eigenvector columns.
pub fn jacobi_eigh(a: &Matrix) -> Result<SymEigen> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("eigendecomposition of non-square matrix".into()));
    }
    let asym = a.asymmetry();
    let scale = a.frobenius_norm().max(1.0);
    if asym > 1e-8 * scale {
        return Err(Error::InvalidInput(format!(
            "matrix is not symmetric (max asymmetry {asym:.3e})"
        )));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(SymEigen {
            values: vec![],
            vectors: Matrix::zeros(0, 0),
        });
    }

    let mut m = a.clone();
    let mut vecs = Matrix::identity(n);
    let fro = a.frobenius_norm();
    let tol = JACOBI_TOL * fro.max(f64::MIN_POSITIVE);

    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m.at(p, q) * m.at(p, q);
            }
        }
        let off = (2.0 * off).sqrt();
        if off <= tol {
            converged = true;
            break;
        }

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.at(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.at(p, p);
                let aqq = m.at(q, q);
                // Skip rotations that cannot change the matrix at f64 precision.
                if apq.abs() <= f64::EPSILON * 0.5 * (app.abs() + aqq.abs()) * 1e-3 {
                    continue;
                }
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                m.set(p, p, app - t * apq);
                m.set(q, q, aqq + t * apq);
                m.set(p, q, 0.0);
                m.set(q, p, 0.0);

                for k in 0..n {
                    if k != p && k != q {
                        let akp = m.at(k, p);
                        let akq = m.at(k, q);
                        let new_kp = akp - s * (akq + tau * akp);
                        let new_kq = akq + s * (akp - tau * akq);
                        m.set(k, p, new_kp);
                        m.set(p, k, new_kp);
                        m.set(k, q, new_kq);
                        m.set(q, k, new_kq);
                    }
                }
                for k in 0..n {
                    let vkp = vecs.at(k, p);
                    let vkq = vecs.at(k, q);
                    vecs.set(k, p, vkp - s * (vkq + tau * vkp));
                    vecs.set(k, q, vkq + s * (vkp - tau * vkq));
                }
            }
        }
    }

    if !converged {
        // One final check: the last sweep may have pushed us under tolerance.
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m.at(p, q) * m.at(p, q);
            }
        }
        if (2.0 * off).sqrt() > tol {
            return Err(Error::Numerical(format!(
                "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps (n = {n})"
            )));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.at(i, i).partial_cmp(&m.at(j, j)).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m.at(i, i)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, new_col, vecs.at(r, old_col));
        }
    }
    Ok(SymEigen { values, vectors })
}

/// Solve the symmetric generalized eigenproblem `A v = lambda B v` with `B`
/// positive definite, via `B = L L^T` and a standard eigensolve of
/// `L^{-1} A L^{-T}`. Eigenvalues ascend; eigenvectors are columns in the
/// original (unwhitened) coordinates.
pub fn generalized_eigh(a: &Matrix, b: &Matrix) -> Result<SymEigen> {
    let chol = Cholesky::factor(b)?;
    let m = chol.whiten(a)?;
    let eig = jacobi_eigh(&m)?;
    let n = a.rows();
    let mut vectors = Matrix::zeros(n, n);
    for col in 0..n {
        let u: Vec<f64> = (0..n).map(|r| eig.vectors.at(r, col)).collect();
        let v = chol.solve_lower_transpose(&u)?;
        for r in 0..n {
            vectors.set(r, col, v[r]);
        }
    }
    Ok(SymEigen {
        values: eig.values,
        vectors,
    })
}
