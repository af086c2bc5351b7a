//! Small dense matrices and the factorizations the solver needs.
//!
//! Problem dimensions here are tiny (a handful of coordinates), so a plain
//! row-major `Vec` with textbook Cholesky and partially pivoted Gaussian
//! elimination is all that is required.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![T::zero(); rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, T::one())
    }

    pub fn scaled_identity(n: usize, value: T) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = value;
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from rows; `None` if the rows are ragged.
    pub fn from_rows(rows: &[Vec<T>]) -> Option<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(Self::new(
            rows.len(),
            cols,
            rows.iter().flatten().copied().collect(),
        ))
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

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
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

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::new(self.rows, self.cols, self.data.iter().map(|&x| f(x)).collect())
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &x| acc + x * x)
            .sqrt()
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// `(A + Aᵀ) / 2`.
    pub fn symmetrize(&self) -> Self {
        let half = T::lit(0.5);
        let mut s = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                s[(i, j)] = (self[(i, j)] + self[(j, i)]) * half;
            }
        }
        s
    }

    /// `‖A − Aᵀ‖_F / ‖A‖_F`, zero for the zero matrix.
    pub fn relative_asymmetry(&self) -> T {
        let norm = self.frobenius_norm();
        if norm == T::zero() {
            return T::zero();
        }
        (self - &self.transpose()).frobenius_norm() / norm
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// `tr(A B)` without forming the product.
    pub fn trace_of_product(&self, other: &Self) -> T {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = T::zero();
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc = acc + self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix::new(
            self.rows,
            self.cols,
            self.data.iter().map(|x| U::lit(x.to_f64_lossy())).collect(),
        )
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> Add for &Matrix<T> {
    type Output = Matrix<T>;

    fn add(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix::new(
            self.rows,
            self.cols,
            self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        )
    }
}

impl<T: Scalar> Sub for &Matrix<T> {
    type Output = Matrix<T>;

    fn sub(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix::new(
            self.rows,
            self.cols,
            self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        )
    }
}

impl<T: Scalar> Mul for &Matrix<T> {
    type Output = Matrix<T>;

    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)] + a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

/// Lower-triangular Cholesky factor `A = L Lᵀ` of a symmetric positive
/// definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky<T> {
    lower: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factorizes `a`, reading only its lower triangle. Returns `None` when a
    /// pivot is not strictly positive or not finite.
    pub fn factor(a: &Matrix<T>) -> Option<Self> {
        if !a.is_square() {
            return None;
        }
        let n = a.rows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d = d - l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s = s - l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Some(Self { lower: l })
    }

    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    pub fn lower(&self) -> &Matrix<T> {
        &self.lower
    }

    /// Solves `L z = b`.
    pub fn forward(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        let l = &self.lower;
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s = s - l[(i, k)] * z[k];
            }
            z[i] = s / l[(i, i)];
        }
        z
    }

    /// Solves `Lᵀ x = z`.
    pub fn backward(&self, z: &[T]) -> Vec<T> {
        let n = self.dim();
        let l = &self.lower;
        let mut x = z.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s = s - l[(k, i)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        x
    }

    pub fn solve_vec(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.dim());
        self.backward(&self.forward(b))
    }

    /// Solves `A X = B` column by column.
    pub fn solve(&self, b: &Matrix<T>) -> Matrix<T> {
        assert_eq!(b.rows(), self.dim());
        let mut x = Matrix::zeros(b.rows(), b.cols());
        let mut col = vec![T::zero(); b.rows()];
        for j in 0..b.cols() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = b[(i, j)];
            }
            let sol = self.solve_vec(&col);
            for (i, v) in sol.into_iter().enumerate() {
                x[(i, j)] = v;
            }
        }
        x
    }

    pub fn inverse(&self) -> Matrix<T> {
        self.solve(&Matrix::identity(self.dim())).symmetrize()
    }

    pub fn log_det(&self) -> T {
        let two = T::lit(2.0);
        self.lower
            .diagonal()
            .into_iter()
            .fold(T::zero(), |acc, d| acc + two * d.ln())
    }

    /// `xᵀ A⁻¹ x`.
    pub fn inv_quad_form(&self, x: &[T]) -> T {
        self.forward(x).iter().fold(T::zero(), |acc, &z| acc + z * z)
    }
}

/// Solves a general square system by Gaussian elimination with partial
/// pivoting. `None` if the matrix is numerically singular.
pub fn solve_dense<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Option<Vec<T>> {
    let n = a.rows();
    assert!(a.is_square() && b.len() == n);
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = a.frobenius_norm();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            m[(i, col)]
                .abs()
                .partial_cmp(&m[(j, col)].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        let p = m[(pivot, col)];
        if !(p.abs() > scale * T::epsilon()) || !p.is_finite() {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(pivot, j)];
                m[(pivot, j)] = tmp;
            }
            x.swap(col, pivot);
        }
        for i in col + 1..n {
            let f = m[(i, col)] / p;
            if f == T::zero() {
                continue;
            }
            for j in col..n {
                m[(i, j)] = m[(i, j)] - f * m[(col, j)];
            }
            x[i] = x[i] - f * x[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s = s - m[(i, j)] * x[j];
        }
        x[i] = s / m[(i, i)];
    }
    Some(x)
}
