//! Small dense linear algebra for the solvers.
//!
//! Everything here targets dimensions up to a few dozen: row-major storage,
//! cyclic Jacobi for symmetric eigenproblems, Cholesky for SPD solves and
//! partial-pivot LU for the occasional general system.

use std::fmt;
use std::ops::{Add, Deref, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![T::one(); n])
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data. Panics if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
    }

    pub fn scaled_identity(n: usize, s: T) -> Self {
        Self::from_diag(&vec![s; n])
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
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols, "matvec dimension");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// `(m + mᵀ) / 2`.
    pub fn symmetric_part(&self) -> Self {
        assert!(self.is_square(), "symmetric part of a non-square matrix");
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |r, c| (self[(r, c)] + self[(c, r)]) * half)
    }

    /// `self · other · selfᵀ`, symmetrized.
    pub fn congruence(&self, other: &Matrix<T>) -> SymMatrix<T> {
        SymMatrix::new(&(self * other) * &self.transpose())
    }

    /// Solves `self · x = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        if !self.is_square() || rhs.rows != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "solve: {}x{} system with {} right-hand rows",
                self.rows, self.cols, rhs.rows
            )));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut b = rhs.clone();
        let scale = a.max_abs();
        if scale == T::zero() {
            return Err(Error::Singular);
        }
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| {
                    a[(x, col)]
                        .abs()
                        .partial_cmp(&a[(y, col)].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(col);
            if a[(pivot, col)].abs() <= scale * T::epsilon() * T::from_usize_lossy(n) {
                return Err(Error::Singular);
            }
            if pivot != col {
                a.swap_rows(pivot, col);
                b.swap_rows(pivot, col);
            }
            let p = a[(col, col)];
            for r in col + 1..n {
                let f = a[(r, col)] / p;
                if f == T::zero() {
                    continue;
                }
                for c in col..n {
                    let v = a[(col, c)];
                    a[(r, c)] -= f * v;
                }
                for c in 0..b.cols {
                    let v = b[(col, c)];
                    b[(r, c)] -= f * v;
                }
            }
        }
        for col in (0..n).rev() {
            let p = a[(col, col)];
            for c in 0..b.cols {
                let mut v = b[(col, c)];
                for k in col + 1..n {
                    v -= a[(col, k)] * b[(k, c)];
                }
                b[(col, c)] = v / p;
            }
        }
        Ok(b)
    }

    pub fn inverse(&self) -> Result<Matrix<T>> {
        self.solve(&Matrix::identity(self.rows))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

impl<T: Scalar> Mul for &Matrix<T> {
    type Output = Matrix<T>;

    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == T::zero() {
                    continue;
                }
                for c in 0..rhs.cols {
                    out.data[r * rhs.cols + c] += a * rhs[(k, c)];
                }
            }
        }
        out
    }
}

impl<T: Scalar> Add for &Matrix<T> {
    type Output = Matrix<T>;

    fn add(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix sum shape");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<T: Scalar> Sub for &Matrix<T> {
    type Output = Matrix<T>;

    fn sub(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix difference shape");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl<T: Scalar> Neg for &Matrix<T> {
    type Output = Matrix<T>;

    fn neg(self) -> Matrix<T> {
        self.scale(-T::one())
    }
}

impl<T: Scalar> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

/// Square matrix that is exactly symmetric.
///
/// Construction symmetrizes its input, so `m[(a, b)] == m[(b, a)]` holds
/// bit-for-bit.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix<T>", into = "Matrix<T>")]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct SymMatrix<T: Scalar>(Matrix<T>);

impl<T: Scalar> SymMatrix<T> {
    /// Symmetrizes `m`. Panics if `m` is not square.
    pub fn new(m: Matrix<T>) -> Self {
        Self(m.symmetric_part())
    }

    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n))
    }

    pub fn scaled_identity(n: usize, s: T) -> Self {
        Self(Matrix::scaled_identity(n, s))
    }

    pub fn from_diag(diag: &[T]) -> Self {
        Self(Matrix::from_diag(diag))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.0
    }

    pub fn add_scaled_identity(&self, s: T) -> Self {
        let mut m = self.0.clone();
        for i in 0..m.rows {
            m[(i, i)] += s;
        }
        Self(m)
    }

    pub fn sym_add(&self, other: &SymMatrix<T>) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sym_sub(&self, other: &SymMatrix<T>) -> Self {
        Self(&self.0 - &other.0)
    }

    pub fn sym_scale(&self, s: T) -> Self {
        Self(self.0.scale(s))
    }

    /// Quadratic form `xᵀ m x`.
    pub fn quad_form(&self, x: &[T]) -> T {
        let n = self.dim();
        let mut acc = T::zero();
        for r in 0..n {
            let row = self.0.row(r);
            let mut s = T::zero();
            for c in 0..n {
                s += row[c] * x[c];
            }
            acc += x[r] * s;
        }
        acc
    }

    /// Eigendecomposition by cyclic Jacobi rotations.
    pub fn eigen(&self) -> SymEigen<T> {
        jacobi_eigen(&self.0)
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        self.eigen().values
    }
}

impl<T: Scalar> TryFrom<Matrix<T>> for SymMatrix<T> {
    type Error = Error;

    fn try_from(m: Matrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        Ok(Self::new(m))
    }
}

impl<T: Scalar> From<SymMatrix<T>> for Matrix<T> {
    fn from(s: SymMatrix<T>) -> Self {
        s.0
    }
}

impl<T: Scalar> Deref for SymMatrix<T> {
    type Target = Matrix<T>;

    fn deref(&self) -> &Matrix<T> {
        &self.0
    }
}

impl<T: Scalar> fmt::Debug for SymMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sym")?;
        self.0.fmt(f)
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct SymEigen<T: Scalar> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Scalar> SymEigen<T> {
    /// `V · diag(f(λ)) · Vᵀ`.
    pub fn reconstruct(&self, f: impl Fn(T) -> T) -> SymMatrix<T> {
        let n = self.values.len();
        let mapped: Vec<T> = self.values.iter().map(|&v| f(v)).collect();
        let v = &self.vectors;
        SymMatrix::new(Matrix::from_fn(n, n, |r, c| {
            (0..n).map(|k| v[(r, k)] * mapped[k] * v[(c, k)]).sum()
        }))
    }
}

fn jacobi_eigen<T: Scalar>(m: &Matrix<T>) -> SymEigen<T> {
    let n = m.rows;
    let mut a = m.clone();
    let mut v = Matrix::identity(n);
    let norm = a.frobenius_norm();
    if norm == T::zero() {
        return SymEigen {
            values: vec![T::zero(); n],
            vectors: v,
        };
    }
    let tol = T::epsilon() * norm;
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= T::min_positive_value() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        a[(x, x)]
            .partial_cmp(&a[(y, y)])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    SymEigen { values, vectors }
}

/// Eigendecomposition of `m` after checking it is SPD: the smallest
/// eigenvalue must exceed `1e-12` times the largest.
pub fn spd_eigen<T: Scalar>(m: &SymMatrix<T>) -> Result<SymEigen<T>> {
    let eig = m.eigen();
    let min = eig.values.first().copied().unwrap_or(T::one());
    let max = eig.values.last().copied().unwrap_or(T::one());
    if !(max > T::zero()) || !(min > T::spd_tolerance() * max) {
        return Err(Error::NotSpd {
            min_eig: min.to_f64_lossy(),
            max_eig: max.to_f64_lossy(),
        });
    }
    Ok(eig)
}

pub fn is_spd<T: Scalar>(m: &SymMatrix<T>) -> bool {
    spd_eigen(m).is_ok()
}

pub fn ensure_spd<T: Scalar>(m: &SymMatrix<T>) -> Result<()> {
    spd_eigen(m).map(|_| ())
}

/// Principal square root of an SPD matrix.
pub fn sym_sqrt<T: Scalar>(m: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    Ok(spd_eigen(m)?.reconstruct(|l| l.sqrt()))
}

/// Lower Cholesky factor `L` with `m = L Lᵀ`.
pub fn cholesky<T: Scalar>(m: &SymMatrix<T>) -> Result<Matrix<T>> {
    let n = m.dim();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > T::zero()) {
            return Err(Error::NotSpd {
                min_eig: d.to_f64_lossy(),
                max_eig: m.max_abs().to_f64_lossy(),
            });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Inverse of an SPD matrix via its Cholesky factor.
pub fn spd_inverse<T: Scalar>(m: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    ensure_spd(m)?;
    let l = cholesky(m)?;
    let n = m.dim();
    // Columns of L⁻¹ by forward substitution, then m⁻¹ = L⁻ᵀ L⁻¹.
    let mut linv = Matrix::zeros(n, n);
    for c in 0..n {
        for r in c..n {
            let mut s = if r == c { T::one() } else { T::zero() };
            for k in c..r {
                s -= l[(r, k)] * linv[(k, c)];
            }
            linv[(r, c)] = s / l[(r, r)];
        }
    }
    Ok(SymMatrix::new(&linv.transpose() * &linv))
}

/// `ln det m` for SPD `m`, from the Cholesky diagonal.
pub fn log_det<T: Scalar>(m: &SymMatrix<T>) -> Result<T> {
    ensure_spd(m)?;
    let l = cholesky(m)?;
    Ok((0..m.dim()).map(|i| l[(i, i)].ln()).sum::<T>() * T::lit(2.0))
}

/// Inverse of a nonsingular (possibly indefinite) symmetric matrix.
pub fn sym_inverse<T: Scalar>(m: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    let eig = m.eigen();
    let scale = eig.values.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()));
    let floor = T::spd_tolerance() * scale;
    if scale == T::zero() || eig.values.iter().any(|v| v.abs() <= floor) {
        return Err(Error::Singular);
    }
    Ok(eig.reconstruct(|l| l.recip()))
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn vec_sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn vec_add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn vec_scale<T: Scalar>(a: &[T], s: T) -> Vec<T> {
    a.iter().map(|&x| x * s).collect()
}
