//! Dense row-major matrices and the factorizations the compressor needs.
//!
//! Everything is f64. Weights are stored as f32 on disk but promoted before
//! any arithmetic; keeping the kernels in one precision makes the error
//! bounds on the SVD contract checkable.

mod lstsq;
mod svd;

pub use lstsq::least_squares_rowspace;
pub use svd::{svd, truncate, SvdResult};

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Error type for the dense kernels. Every variant carries the shapes or
/// magnitudes needed to reconstruct what went wrong without a debugger.
#[derive(Debug, Clone, PartialEq)]
pub enum LinalgError {
    /// Operand shapes do not compose for the named operation.
    DimensionMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    /// Buffer length does not match `rows * cols`.
    BadLength {
        rows: usize,
        cols: usize,
        len: usize,
    },
    /// Matrices must have at least one row and one column.
    Empty,
    /// Requested truncation rank is outside `1..=max`.
    RankOutOfRange { rank: usize, max: usize },
    /// The implicit-shift QR sweep failed to deflate a singular value
    /// within the per-value iteration budget. Practically unreachable for
    /// finite input; surfaced instead of panicking so callers can map it
    /// to a numerical-failure exit.
    NoConvergence { iterations: usize },
    /// A Gram matrix was singular to working precision; carries the
    /// smallest and largest singular values observed.
    Singular { smallest: f64, largest: f64 },
    /// Input contained a NaN or infinity.
    NotFinite { op: &'static str },
}

impl core::fmt::Display for LinalgError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LinalgError::DimensionMismatch { op, lhs, rhs } => write!(
                f,
                "{op}: dimension mismatch ({}x{} vs {}x{})",
                lhs.0, lhs.1, rhs.0, rhs.1
            ),
            LinalgError::BadLength { rows, cols, len } => write!(
                f,
                "buffer of length {len} cannot hold a {rows}x{cols} matrix"
            ),
            LinalgError::Empty => write!(f, "matrix dimensions must be nonzero"),
            LinalgError::RankOutOfRange { rank, max } => {
                write!(f, "rank {rank} outside valid range 1..={max}")
            }
            LinalgError::NoConvergence { iterations } => {
                write!(f, "SVD failed to converge within {iterations} iterations")
            }
            LinalgError::Singular { smallest, largest } => write!(
                f,
                "matrix is singular to working precision (sigma_min {smallest:e}, sigma_max {largest:e})"
            ),
            LinalgError::NotFinite { op } => write!(f, "{op}: input contains NaN or infinity"),
        }
    }
}

impl core::error::Error for LinalgError {}

/// Dense row-major f64 matrix. Dimensions are always at least 1x1.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Wraps a row-major buffer. Fails on empty dimensions or a length that
    /// does not equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Empty);
        }
        if data.len() != rows * cols {
            return Err(LinalgError::BadLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds from nested rows; handy in tests. Panics on ragged input so
    /// that a typo in a fixture fails loudly.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        assert!(!rows.is_empty() && !rows[0].is_empty(), "empty matrix literal");
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged matrix literal");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
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

    /// Square matrix with `d` on the diagonal.
    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m.data[i * d.len() + i] = x;
        }
        m
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
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.cols + j] = x;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// `self * other`. Inner loop is ordered i-k-j so both operands stream
    /// row-major.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul",
                lhs: (self.rows, self.cols),
                rhs: (other.rows, other.cols),
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (k, &a_ik) in a_row.iter().enumerate() {
                if a_ik == 0.0 {
                    continue;
                }
                let b_row = other.row(k);
                for (o, &b_kj) in out_row.iter_mut().zip(b_row) {
                    *o += a_ik * b_kj;
                }
            }
        }
        Ok(out)
    }

    /// `self * x` for a column vector `x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "matvec",
                lhs: (self.rows, self.cols),
                rhs: (x.len(), 1),
            });
        }
        let mut out = vec![0.0; self.rows];
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = dot(row, x);
        }
        Ok(out)
    }

    /// `self - other`.
    pub fn sub(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "sub",
                lhs: (self.rows, self.cols),
                rhs: (other.rows, other.cols),
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Frobenius norm, accumulated with scaling so that norms of matrices
    /// with huge or tiny entries neither overflow nor flush to zero.
    pub fn frobenius_norm(&self) -> f64 {
        let mut scale = 0.0f64;
        let mut ssq = 1.0f64;
        for &x in &self.data {
            if x == 0.0 {
                continue;
            }
            let ax = math::abs(x);
            if scale < ax {
                let r = scale / ax;
                ssq = 1.0 + ssq * r * r;
                scale = ax;
            } else {
                let r = ax / scale;
                ssq += r * r;
            }
        }
        scale * math::sqrt(ssq)
    }

    /// Largest absolute entry of `self - other`; shapes must match.
    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64, LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "max_abs_diff",
                lhs: (self.rows, self.cols),
                rhs: (other.rows, other.cols),
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max(math::abs(a - b))))
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
