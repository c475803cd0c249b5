//! Dense complex matrices in row-major storage.
//!
//! Everything downstream (projectors, class operators, X operators, path
//! amplitudes) is built from [`CMatrix`]. Target dimensions are desk-scale:
//! single-time spaces up to 64, tensor spaces up to 4096, so dense storage
//! and naive O(n³) products are deliberate.
//!
//! Matrices serialize as `{"rows": n, "cols": m, "entries": [[re, im], ...]}`
//! with entries in row-major order.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Index, Mul, Sub};
use thiserror::Error;

pub type Complex64 = num_complex::Complex<f64>;

pub const C_ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const C_ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const C_I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Structural and numerical validation errors for matrix-level types.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("entry count {found} does not match {rows}x{cols}")]
    BadEntryCount {
        rows: usize,
        cols: usize,
        found: usize,
    },
    #[error("matrix dimensions must be positive, got {rows}x{cols}")]
    ZeroDimension { rows: usize, cols: usize },
    #[error("non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("not idempotent: max |P^2 - P| = {error:.3e} exceeds tol {tol:.3e}")]
    NotIdempotent { error: f64, tol: f64 },
    #[error("not hermitian: max |M - M^dag| = {error:.3e} exceeds tol {tol:.3e}")]
    NotHermitian { error: f64, tol: f64 },
    #[error("not positive semidefinite: min eigenvalue {min_eigenvalue:.3e} below -tol = {:.3e}", -tol)]
    NotPositive { min_eigenvalue: f64, tol: f64 },
    #[error("trace {trace:.12} is not 1 within tol {tol:.3e}")]
    TraceNotOne { trace: f64, tol: f64 },
    #[error(
        "hermitian eigendecomposition failed to converge (dim {dim}, max |entry| {max_abs:.3e})"
    )]
    EigenFailure { dim: usize, max_abs: f64 },
}

/// A dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    /// Build from row-major entries, validating shape and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::ZeroDimension { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(LinalgError::BadEntryCount {
                rows,
                cols,
                found: data.len(),
            });
        }
        for (k, z) in data.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(LinalgError::NonFinite {
                    row: k / cols,
                    col: k % cols,
                });
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C_ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = C_ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Square matrix with the given complex diagonal.
    pub fn from_diag(diag: &[Complex64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { C_ZERO })
    }

    /// Square matrix with the given real diagonal.
    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(
            n,
            n,
            |i, j| {
                if i == j {
                    Complex64::new(diag[i], 0.0)
                } else {
                    C_ZERO
                }
            },
        )
    }

    /// The matrix unit E_{i,j}: 1 at (i, j), zero elsewhere.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        m.data[i * dim + j] = C_ONE;
        m
    }

    /// Diagonal projector onto the span of the listed basis vectors.
    pub fn basis_projector(dim: usize, indices: &[usize]) -> Result<Self, LinalgError> {
        let mut m = Self::zeros(dim, dim);
        for &i in indices {
            if i >= dim {
                return Err(LinalgError::DimensionMismatch {
                    context: "basis_projector index",
                    expected: dim,
                    found: i,
                });
            }
            m.data[i * dim + i] = C_ONE;
        }
        Ok(m)
    }

    /// Rank-1 projector |v⟩⟨v| / ⟨v|v⟩.
    pub fn outer_normalized(v: &[Complex64]) -> Result<Self, LinalgError> {
        let n = v.len();
        let norm_sq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if n == 0 || norm_sq == 0.0 || !norm_sq.is_finite() {
            return Err(LinalgError::ZeroDimension { rows: n, cols: 1 });
        }
        Ok(Self::from_fn(n, n, |i, j| v[i] * v[j].conj() / norm_sq))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Side length of a square matrix; errors on rectangular input.
    pub fn dim(&self) -> Result<usize, LinalgError> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conjugate(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of a non-square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Max absolute entry (the ‖·‖_max norm used by all tolerance checks).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ‖self − other‖_max.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.rows, other.rows, "shape mismatch in max_abs_diff");
        assert_eq!(self.cols, other.cols, "shape mismatch in max_abs_diff");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.max_abs_diff(other) <= tol
    }

    /// Kronecker product; block (i,j) of the result is `self[(i,j)] * other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (r1, c1, r2, c2) = (self.rows, self.cols, other.rows, other.cols);
        let mut m = Self::zeros(r1 * r2, c1 * c2);
        for i1 in 0..r1 {
            for j1 in 0..c1 {
                let a = self[(i1, j1)];
                if a == C_ZERO {
                    continue;
                }
                for i2 in 0..r2 {
                    for j2 in 0..c2 {
                        m.data[(i1 * r2 + i2) * (c1 * c2) + (j1 * c2 + j2)] = a * other[(i2, j2)];
                    }
                }
            }
        }
        m
    }

    /// ‖M − M†‖_max.
    pub fn hermiticity_error(&self) -> f64 {
        assert!(self.is_square(), "hermiticity of a non-square matrix");
        let mut err: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                err = err.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        err
    }

    /// ‖M² − M‖_max.
    pub fn idempotency_error(&self) -> f64 {
        (self * self).max_abs_diff(self)
    }

    /// ‖M†M − I‖_max.
    pub fn unitarity_error(&self) -> f64 {
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.rows))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermiticity_error() <= tol
    }
}

/// Tensor (Kronecker) product of two matrices.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kron(b)
}

/// Tensor product of a sequence of matrices, left to right.
///
/// Panics on an empty sequence.
pub fn tensor_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    let mut it = factors.into_iter();
    let first = it.next().expect("tensor_all of an empty sequence").clone();
    it.fold(first, |acc, m| acc.kron(m))
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.rows, rhs.rows, "shape mismatch in add");
        assert_eq!(self.cols, rhs.cols, "shape mismatch in add");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.rows, rhs.rows, "shape mismatch in sub");
        assert_eq!(self.cols, rhs.cols, "shape mismatch in sub");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in mul");
        let (n, k, m) = (self.rows, self.cols, rhs.cols);
        let mut out = CMatrix::zeros(n, m);
        // i-k-j order: the inner loop walks both operands contiguously.
        for i in 0..n {
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == C_ZERO {
                    continue;
                }
                let row = &rhs.data[p * m..(p + 1) * m];
                let out_row = &mut out.data[i * m..(i + 1) * m];
                for j in 0..m {
                    out_row[j] += a * row[j];
                }
            }
        }
        out
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for j in 0..self.cols.min(8) {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f, "{}", if self.cols > 8 { "…" } else { "" })?;
        }
        if self.rows > 8 {
            writeln!(f, "  …")?;
        }
        write!(f, "]")
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    entries: Vec<(f64, f64)>,
}

impl From<CMatrix> for MatrixRepr {
    fn from(m: CMatrix) -> Self {
        MatrixRepr {
            rows: m.rows,
            cols: m.cols,
            entries: m.data.iter().map(|z| (z.re, z.im)).collect(),
        }
    }
}

impl TryFrom<MatrixRepr> for CMatrix {
    type Error = LinalgError;

    fn try_from(r: MatrixRepr) -> Result<Self, LinalgError> {
        CMatrix::new(
            r.rows,
            r.cols,
            r.entries
                .into_iter()
                .map(|(re, im)| Complex64::new(re, im))
                .collect(),
        )
    }
}

impl Serialize for CMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        MatrixRepr::from(self.clone()).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(deserializer)?;
        CMatrix::try_from(repr).map_err(serde::de::Error::custom)
    }
}
