//! Small dense linear algebra: row-major matrices, LU with partial pivoting,
//! and a cyclic-Jacobi eigensolver for symmetric matrices.
//!
//! Everything here is deterministic: fixed pivoting rule, fixed summation
//! order. Problem sizes stay in the low thousands, so no blocking or
//! parallelism is attempted.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("singular block: pivot {pivot:.3e} below {threshold:.3e} at column {col}")]
    SingularBlock {
        col: usize,
        pivot: f64,
        threshold: f64,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("Jacobi eigensolver did not converge within {0} sweeps")]
    NoConvergence(usize),
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
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
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// y = A x (sizes checked by the caller).
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut s = 0.0;
            for (a, b) in row.iter().zip(x.iter()) {
                s += a * b;
            }
            y[i] = s;
        }
        y
    }

    /// Max-norm of the entries.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// LU factorization with partial pivoting, stored in-place.
#[derive(Debug, Clone)]
pub struct LuFactor {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

/// Pivot threshold relative to the matrix max-norm.
pub const PIVOT_RTOL: f64 = 1e-14;

impl LuFactor {
    /// Factor a square matrix. Fails with `SingularBlock` when a pivot falls
    /// below `PIVOT_RTOL * max_norm`.
    pub fn new(a: &DenseMatrix) -> Result<Self, LinalgError> {
        if a.rows != a.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let threshold = PIVOT_RTOL * a.max_norm();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            // pick the largest pivot in column k
            let mut p = k;
            let mut pmax = lu.get(k, k).abs();
            for i in (k + 1)..n {
                let v = lu.get(i, k).abs();
                if v > pmax {
                    pmax = v;
                    p = i;
                }
            }
            if pmax <= threshold {
                return Err(LinalgError::SingularBlock {
                    col: k,
                    pivot: pmax,
                    threshold,
                });
            }
            if p != k {
                perm.swap(k, p);
                for j in 0..n {
                    let tmp = lu.get(k, j);
                    lu.set(k, j, lu.get(p, j));
                    lu.set(p, j, tmp);
                }
            }
            let pivot = lu.get(k, k);
            for i in (k + 1)..n {
                let l = lu.get(i, k) / pivot;
                lu.set(i, k, l);
                if l != 0.0 {
                    let (head, tail) = lu.data.split_at_mut(i * n);
                    let row_k = &head[k * n..k * n + n];
                    let row_i = &mut tail[..n];
                    for j in (k + 1)..n {
                        row_i[j] -= l * row_k[j];
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows;
        debug_assert_eq!(b.len(), n);
        let mut x: Vec<f64> = (0..n).map(|i| b[self.perm[i]]).collect();
        // forward substitution with unit-diagonal L
        for i in 1..n {
            let row = self.lu.row(i);
            let mut s = x[i];
            for j in 0..i {
                s -= row[j] * x[j];
            }
            x[i] = s;
        }
        // backward substitution with U
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= row[j] * x[j];
            }
            x[i] = s / row[i];
        }
        x
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, v)` with eigenvalues ascending and the columns of
/// `v` the matching orthonormal eigenvectors. Off-diagonal tolerance is
/// `1e-14 * max_norm`, at most `max_sweeps` sweeps.
pub fn jacobi_eigen(
    a: &DenseMatrix,
    max_sweeps: usize,
) -> Result<(Vec<f64>, DenseMatrix), LinalgError> {
    if a.rows != a.cols {
        return Err(LinalgError::DimensionMismatch(format!(
            "eigen needs a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    let mut m = a.clone();
    let mut v = DenseMatrix::identity(n);
    if n == 1 {
        return Ok((vec![m.get(0, 0)], v));
    }
    let tol = 1e-14 * m.max_norm().max(f64::MIN_POSITIVE);
    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m.get(p, q).abs());
            }
        }
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // rows/columns p and q of m
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    if !converged {
        // final check after the last sweep
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m.get(p, q).abs());
            }
        }
        if off > tol {
            return Err(LinalgError::NoConvergence(max_sweeps));
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).partial_cmp(&m.get(j, j)).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m.get(i, i)).collect();
    let mut vs = DenseMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            vs.set(k, new_col, v.get(k, old_col));
        }
    }
    Ok((eigenvalues, vs))
}
