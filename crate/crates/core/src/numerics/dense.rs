//! Dense row-major matrices and vectors with the factorizations the solver needs.
//!
//! Everything here is plain `Vec<f64>` storage. Problem sizes stay in the
//! hundreds, so cache-friendly dense kernels beat any sparse machinery.

use crate::error::{Error, Result};

/// Relative tolerance for symmetry checks.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Dense column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    data: Vec<f64>,
}

impl DenseVector {
    /// Builds a vector, rejecting non-finite entries.
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("vector entry {i}"),
            });
        }
        Ok(DenseVector { data })
    }

    pub fn zeros(dim: usize) -> Self {
        DenseVector {
            data: vec![0.0; dim],
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize) -> f64) -> Self {
        DenseVector {
            data: (0..dim).map(|i| f(i)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn add(&self, other: &DenseVector) -> DenseVector {
        assert_eq!(self.dim(), other.dim(), "vector add dims");
        DenseVector::from_fn(self.dim(), |i| self.data[i] + other.data[i])
    }

    pub fn sub(&self, other: &DenseVector) -> DenseVector {
        assert_eq!(self.dim(), other.dim(), "vector sub dims");
        DenseVector::from_fn(self.dim(), |i| self.data[i] - other.data[i])
    }

    pub fn scaled(&self, alpha: f64) -> DenseVector {
        DenseVector::from_fn(self.dim(), |i| alpha * self.data[i])
    }

    pub fn dot(&self, other: &DenseVector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dot dims");
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_l1(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<usize> for DenseVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl std::ops::IndexMut<usize> for DenseVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries, rejecting non-finite values
    /// and shape/length disagreements.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::param("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::dims(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("matrix entry {i}"),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = values[i];
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `A v`.
    pub fn matvec(&self, v: &DenseVector) -> DenseVector {
        assert_eq!(self.cols, v.dim(), "matvec dims");
        DenseVector::from_fn(self.rows, |i| {
            let row = self.row(i);
            row.iter().zip(v.as_slice()).map(|(a, b)| a * b).sum()
        })
    }

    /// `A' v`.
    pub fn tr_matvec(&self, v: &DenseVector) -> DenseVector {
        assert_eq!(self.rows, v.dim(), "tr_matvec dims");
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            let row = self.row(i);
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * vi;
            }
        }
        DenseVector { data: out }
    }

    /// `A B`.
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "matmul dims");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                let other_row = other.row(k);
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(other_row) {
                    *o += aik * b;
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scaled(&self, alpha: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs().max(1.0);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self.get(i, j) - self.get(j, i)).abs() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }
}

/// M-weighted squared norm `<v, M v>`.
///
/// `M` must be square, symmetric (1e-10 relative) and match `v`; positive
/// semidefiniteness is the caller's contract. Tiny negative results from
/// rounding are clamped to zero.
pub fn weighted_norm_sq(v: &DenseVector, m: &DenseMatrix) -> Result<f64> {
    if !m.is_square() || m.rows() != v.dim() {
        return Err(Error::dims(format!(
            "weighted norm: matrix {}x{} vs vector dim {}",
            m.rows(),
            m.cols(),
            v.dim()
        )));
    }
    if !m.is_symmetric(SYMMETRY_TOL) {
        return Err(Error::NotSymmetric {
            context: "weighted norm matrix".to_string(),
        });
    }
    Ok(v.dot(&m.matvec(v)).max(0.0))
}

/// Largest singular value by power iteration on `M'M`.
///
/// Deterministic all-ones start, stop on 1e-10 relative change of the
/// Rayleigh quotient, 1e4 iteration cap.
pub fn spectral_norm(m: &DenseMatrix) -> f64 {
    const REL_STOP: f64 = 1e-10;
    const MAX_ITER: usize = 10_000;

    let n = m.cols();
    let mut v = DenseVector::from_fn(n, |_| 1.0 / (n as f64).sqrt());
    let mut theta_prev = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let w = m.matvec(&v); // M v
        let theta = w.norm_sq(); // v' M'M v for unit v
        if theta == 0.0 {
            return 0.0;
        }
        if (theta - theta_prev).abs() <= REL_STOP * theta {
            return theta.sqrt();
        }
        theta_prev = theta;
        let g = m.tr_matvec(&w); // M'M v
        let g_norm = g.norm();
        if g_norm == 0.0 {
            return 0.0;
        }
        v = g.scaled(1.0 / g_norm);
    }
    theta_prev.sqrt()
}

/// Cached Cholesky factorization of a symmetric positive definite matrix.
///
/// Factor once, then solve repeatedly; the engine reuses one factor across
/// all iterations of a run.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    /// Lower-triangular factor, row-major, upper part zero.
    l: Vec<f64>,
}

impl CholeskyFactor {
    pub fn new(m: &DenseMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dims("Cholesky needs a square matrix".to_string()));
        }
        if !m.is_symmetric(SYMMETRY_TOL) {
            return Err(Error::NotSymmetric {
                context: "Cholesky input".to_string(),
            });
        }
        let n = m.rows();
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = m.get(i, j);
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return Err(Error::NotPositiveDefinite { pivot: i });
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        Ok(CholeskyFactor { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `M y = rhs` via the stored factor.
    pub fn solve(&self, rhs: &DenseVector) -> DenseVector {
        assert_eq!(self.n, rhs.dim(), "cholesky solve dims");
        let n = self.n;
        let mut y = rhs.as_slice().to_vec();
        // forward: L w = rhs
        for i in 0..n {
            let mut sum = y[i];
            for k in 0..i {
                sum -= self.l[i * n + k] * y[k];
            }
            y[i] = sum / self.l[i * n + i];
        }
        // backward: L' y = w
        for i in (0..n).rev() {
            let mut sum = y[i];
            for k in (i + 1)..n {
                sum -= self.l[k * n + i] * y[k];
            }
            y[i] = sum / self.l[i * n + i];
        }
        DenseVector { data: y }
    }
}

/// Solves a symmetric positive definite system with one iterative-refinement
/// step, meeting `||My - rhs|| <= 1e-10 (1 + ||rhs||)`.
pub fn solve_spd(m: &DenseMatrix, rhs: &DenseVector) -> Result<DenseVector> {
    let factor = CholeskyFactor::new(m)?;
    let mut y = factor.solve(rhs);
    let residual = rhs.sub(&m.matvec(&y));
    if residual.norm() > 1e-13 * (1.0 + rhs.norm()) {
        y = y.add(&factor.solve(&residual));
    }
    Ok(y)
}
